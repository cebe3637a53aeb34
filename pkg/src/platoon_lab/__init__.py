"""Analysis toolkit for asymmetric bidirectional vehicle platoons."""

from .numerics import (
    Polynomial,
    RationalTF,
    poly_add_scaled,
    poly_eval,
    poly_mul,
    poly_roots,
    rtf_eval,
)
from .platoon import (
    DominanceCertificate,
    PlatoonConfig,
    SpectrumReport,
    build_laplacian,
    dominance_certificate,
    fiedler_lower_bound,
    reduce_laplacian,
    spectrum,
    spectrum_report,
)
from .closedform import ThetaRoots, closedform_eigenvalues, solve_thetas
from .analysis import (
    Block,
    FreqSeries,
    GammaPoint,
    HarmonicVerdict,
    block_stable,
    direct_response,
    frequency_series,
    gamma_sequence,
    harmonic_test,
    hinf_norm,
    instantiate_family,
    kappa_modulus_sq,
    make_block,
    open_loop,
    product_response,
    verify_eigen_identities,
    zeta_min,
)
from .sim import SimScenario, SineSignal, StepSignal, TimeSeries, build_state_space, dt_limit, simulate

__version__ = "0.1.0"

__all__ = [
    "Polynomial", "RationalTF", "poly_add_scaled", "poly_eval", "poly_mul",
    "poly_roots", "rtf_eval",
    "DominanceCertificate", "PlatoonConfig", "SpectrumReport", "build_laplacian",
    "dominance_certificate", "fiedler_lower_bound", "reduce_laplacian",
    "spectrum", "spectrum_report",
    "ThetaRoots", "closedform_eigenvalues", "solve_thetas",
    "Block", "FreqSeries", "GammaPoint", "HarmonicVerdict", "block_stable",
    "direct_response", "frequency_series", "gamma_sequence", "harmonic_test",
    "hinf_norm", "instantiate_family", "kappa_modulus_sq", "make_block",
    "open_loop", "product_response", "verify_eigen_identities", "zeta_min",
    "SimScenario", "SineSignal", "StepSignal", "TimeSeries", "build_state_space",
    "dt_limit", "simulate",
    "__version__",
]
