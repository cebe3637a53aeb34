"""Frequency-domain platoon analysis.

The transfer function from the second vehicle's input to the last vehicle's
position factors into a product of closed-loop blocks, one per reduced
Laplacian eigenvalue: ``T(s) = (1/mu_2) * prod_i lam_i M(s) / (1 + lam_i M(s))``
with ``M = C*G`` the per-vehicle open loop.  This module builds those blocks,
evaluates the product (in log-magnitude/phase form so long platoons cannot
overflow), provides the full interconnected state-space response as an
independent oracle, and runs the harmonic-instability test: when the spectrum
admits a size-independent positive lower bound and the closed-loop block at
that bound has a peak gain above one, the platoon's peak gain grows at least
geometrically with the vehicle count.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import (
    Polynomial,
    RationalTF,
    poly_add_scaled,
    poly_eval,
    poly_mul,
    poly_roots,
    rtf_eval,
)
from .platoon import PlatoonConfig, spectrum_report

logger = logging.getLogger(__name__)

DEFAULT_OMEGA_BAND = (1e-3, 1e3)

HARMONICALLY_UNSTABLE = "harmonically-unstable"
TEST_INCONCLUSIVE = "test-inconclusive"
UNSTABLE_BLOCKS = "unstable-blocks"

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Block:
    """Closed loop of the open loop M under output feedback with gain ``lam``.

    ``tf`` is lam*num(M) / (den(M) + lam*num(M)); with an integrator in M the
    DC gain is exactly 1.
    """

    lam: float
    tf: RationalTF


@dataclass(frozen=True)
class FreqSeries:
    """Sampled frequency response on a strictly increasing grid."""

    omegas: np.ndarray
    values: np.ndarray

    @property
    def magnitudes_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(self.values))


@dataclass(frozen=True)
class HarmonicVerdict:
    """Outcome of the harmonic-instability test.

    The certified test runs at ``lambda_min_used``, the size-independent lower
    bound on the spectrum (None when the max asymmetry is >= 1, in which case
    no uniform bound is available and the test is inconclusive).  The sharper
    per-platoon peak gain at the actual Fiedler eigenvalue is recorded
    separately as ``hinf_gamma_fiedler``.  ``alpha + j*beta`` is the scaled
    open loop ``lambda_min_used * M`` evaluated at the peak frequency
    ``omega0``; whenever the peak gain exceeds one, ``alpha < -1/2`` and every
    eigenvalue's block has modulus at least ``zeta_min > 1`` there.
    """

    verdict: str
    fiedler: float
    fiedler_lower: float | None
    lambda_min_used: float | None
    hinf_gamma_min: float | None
    hinf_gamma_fiedler: float | None
    omega0: float | None
    alpha: float | None
    beta: float | None
    zeta_min: float | None
    omega_band: tuple[float, float]


@dataclass(frozen=True)
class GammaPoint:
    """One platoon size in a peak-gain sweep."""

    n: int
    gamma: float
    gamma_root_n: float
    zeta_min_lower: float | None


def open_loop(cfg: PlatoonConfig) -> RationalTF:
    """Per-vehicle open loop M = C*G; factors are kept, never cancelled."""
    num = poly_mul(cfg.controller.num, cfg.vehicle.num)
    den = poly_mul(cfg.controller.den, cfg.vehicle.den)
    return RationalTF(num=num, den=den)


def make_block(lam: float, M: RationalTF) -> Block:
    """Closed-loop block for feedback gain ``lam`` > 0 around the open loop M."""
    if not lam > 0:
        raise ValueError("feedback gain must be positive")
    num = poly_mul(Polynomial((float(lam),)), M.num)
    den = poly_add_scaled(M.den, M.num, float(lam))
    return Block(lam=float(lam), tf=RationalTF(num=num, den=den))


def block_stable(b: Block) -> bool:
    """True iff every closed-loop pole has real part below -1e-9."""
    return all(r.real < -1e-9 for r in poly_roots(b.tf.den))


@lru_cache(maxsize=128)
def _prepared(cfg: PlatoonConfig):
    """Spectrum, open loop, blocks, and a one-time stability check per config."""
    rep = spectrum_report(cfg)
    M = open_loop(cfg)
    blocks = tuple(make_block(lam, M) for lam in rep.eigenvalues)
    all_stable = all(block_stable(b) for b in blocks)
    if not all_stable:
        logger.warning(
            "some closed-loop blocks are unstable; frequency responses are "
            "evaluated but do not define peak gains"
        )
    return rep, M, blocks, all_stable


def _tf_response(tf: RationalTF):
    """Frequency-response callable omega -> tf(j*omega), scalar or ndarray."""

    def response(omega):
        return rtf_eval(tf, 1j * np.asarray(omega, dtype=float))

    return response


def product_response(cfg: PlatoonConfig, omega):
    """Platoon transfer function T(j*omega) from the product of blocks.

    Accepts a scalar or an ndarray of frequencies.  The product over the n-1
    blocks is accumulated in log-magnitude and phase so that long platoons
    with large per-block gains stay inside floating-point range.

    Raises
    ------
    ValueError
        If some block has a pole exactly on the imaginary axis at ``omega``.
    """
    rep, M, _, _ = _prepared(cfg)
    scalar = np.ndim(omega) == 0
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    s = 1j * w
    bq = poly_eval(M.num, s)
    ap = poly_eval(M.den, s)
    lams = np.asarray(rep.eigenvalues)[:, None]
    num = lams * bq[None, :]
    den = ap[None, :] + num
    if np.any(den == 0):
        bad = w[np.nonzero(np.any(den == 0, axis=0))[0][0]]
        raise ValueError(f"response undefined at omega={bad}: closed-loop pole on the imaginary axis")
    with np.errstate(divide="ignore"):
        logmag = np.sum(np.log(np.abs(num)) - np.log(np.abs(den)), axis=0)
    phase = np.sum(np.angle(num) - np.angle(den), axis=0)
    out = np.exp(logmag + 1j * phase) / cfg.gains[0]
    return complex(out[0]) if scalar else out


def controllable_canonical(tf: RationalTF) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Controllable-canonical realization (A, B, C) of a strictly proper tf.

    The position output has no direct feedthrough, so the numerator degree
    must be below the denominator degree.
    """
    if tf.num.degree >= tf.den.degree and not tf.num.is_zero:
        raise ValueError(
            "open loop must be proper: numerator degree "
            f"{tf.num.degree} is not below denominator degree {tf.den.degree}"
        )
    den = np.asarray(tf.den.coeffs)
    num = np.asarray(tf.num.coeffs)
    lead = den[-1]
    den = den / lead
    num = num / lead
    n = len(den) - 1
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:-1]
    B = np.zeros(n)
    B[-1] = 1.0
    C = np.zeros(n)
    C[: len(num)] = num
    return A, B, C


@lru_cache(maxsize=32)
def _interconnection(cfg: PlatoonConfig):
    """Reduced-platoon state space: input at vehicle 2, output at the last vehicle."""
    from .platoon import build_laplacian, reduce_laplacian

    M = open_loop(cfg)
    Am, Bm, Cm = controllable_canonical(M)
    R = reduce_laplacian(build_laplacian(cfg))
    m = Am.shape[0]
    nn = cfg.n - 1
    A = np.kron(np.eye(nn), Am) - np.kron(R, np.outer(Bm, Cm))
    B = np.zeros(nn * m)
    B[:m] = Bm
    C = np.zeros(nn * m)
    C[-m:] = Cm
    return A, B, C


def direct_response(cfg: PlatoonConfig, omega: float) -> complex:
    """T(j*omega) from one dense solve on the full interconnected state space.

    This is the oracle path: it never uses the block product.  At omega = 0
    the solve is singular whenever the open loop has an integrator, so the DC
    value is returned through the block formula, which is finite there.
    """
    if omega == 0.0:
        return product_response(cfg, 0.0)
    A, B, C = _interconnection(cfg)
    dim = A.shape[0]
    try:
        z = np.linalg.solve(1j * omega * np.eye(dim) - A, B)
    except np.linalg.LinAlgError:
        raise ValueError(f"response undefined at omega={omega}") from None
    val = complex(C @ z)
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise ValueError(f"response undefined at omega={omega}")
    return val


def _mag_at(response, omega: float) -> float:
    val = complex(np.asarray(response(omega)).reshape(()))
    mag = abs(val)
    if not math.isfinite(mag):
        raise ValueError(f"non-finite response at omega={omega}")
    return mag


def hinf_norm(response, omega_lo: float = DEFAULT_OMEGA_BAND[0],
              omega_hi: float = DEFAULT_OMEGA_BAND[1], n_scan: int = 2000):
    """Peak magnitude of a frequency response over a band, plus its location.

    Parameters
    ----------
    response : callable
        omega -> complex value; must accept an ndarray of frequencies.
    omega_lo, omega_hi : float
        Scan band in rad/s (log-spaced coarse scan of ``n_scan`` points).
    n_scan : int
        Coarse grid size before golden-section refinement.

    Returns
    -------
    (gamma, omega0) : tuple of float
        ``gamma`` is the larger of the refined band peak and the DC value;
        ``omega0`` is its frequency (0.0 when DC wins).  When several scan
        points tie within 1e-9 the smallest frequency seeds the refinement.

    Notes
    -----
    The reported value is the maximum over the scanned band plus DC, which
    equals the supremum over all frequencies for responses that roll off
    outside the band; widen the band for systems with activity outside it.
    """
    if not 0 < omega_lo < omega_hi:
        raise ValueError("need 0 < omega_lo < omega_hi")
    grid = np.logspace(math.log10(omega_lo), math.log10(omega_hi), n_scan)
    mags = np.abs(np.asarray(response(grid)))
    if not np.all(np.isfinite(mags)):
        bad = grid[np.nonzero(~np.isfinite(mags))[0][0]]
        raise ValueError(f"non-finite response at omega={bad}")
    top = float(mags.max())
    i = int(np.nonzero(mags >= top * (1.0 - 1e-9))[0][0])
    best_mag, best_w = float(mags[i]), float(grid[i])

    # golden-section on log-frequency inside the bracketing cell pair
    a = math.log(grid[max(i - 1, 0)])
    b = math.log(grid[min(i + 1, n_scan - 1)])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _mag_at(response, math.exp(c))
    fd = _mag_at(response, math.exp(d))
    while b - a > 1e-8:  # log-width equals relative width in omega
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = _mag_at(response, math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = _mag_at(response, math.exp(d))
        for fm, wm in ((fc, math.exp(c)), (fd, math.exp(d))):
            if fm > best_mag:
                best_mag, best_w = fm, wm

    dc = _mag_at(response, 0.0)
    if dc > best_mag:
        return dc, 0.0
    return best_mag, best_w


def kappa_modulus_sq(kappa: float, alpha: float, beta: float) -> float:
    """Squared modulus of the closed loop at gain ratio ``kappa``.

    With ``alpha + j*beta`` the scaled open loop at the peak frequency, the
    block for ``kappa`` times that gain has squared modulus
    ``1 - (2*kappa*alpha + 1) / ((kappa*alpha + 1)**2 + kappa**2 * beta**2)``;
    for ``alpha < -1/2`` and ``kappa >= 1`` this exceeds one.
    """
    den = (kappa * alpha + 1.0) ** 2 + (kappa * beta) ** 2
    if den <= 0.0:
        raise ValueError("closed-loop pole at the peak frequency: zero denominator")
    return 1.0 - (2.0 * kappa * alpha + 1.0) / den


def _zeta_search(alpha: float, beta: float, kappa_max: float) -> float:
    """Minimum block modulus over gain ratios in [1, kappa_max].

    Coarse grid then golden-section refinement; the modulus-squared can have
    two stationary points in kappa, so the grid guards against refining into
    a non-global valley.
    """
    if kappa_max <= 1.0:
        return math.sqrt(kappa_modulus_sq(1.0, alpha, beta))
    ks = np.linspace(1.0, kappa_max, 512)
    den = (ks * alpha + 1.0) ** 2 + (ks * beta) ** 2
    vals = 1.0 - (2.0 * ks * alpha + 1.0) / den
    j = int(np.argmin(vals))
    a, b = ks[max(j - 1, 0)], ks[min(j + 1, len(ks) - 1)]
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = kappa_modulus_sq(c, alpha, beta)
    fd = kappa_modulus_sq(d, alpha, beta)
    tol = 1e-10 * max(1.0, kappa_max)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = kappa_modulus_sq(c, alpha, beta)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = kappa_modulus_sq(d, alpha, beta)
    best = min(float(vals[j]), fc, fd)
    return math.sqrt(best)


def zeta_min(cfg: PlatoonConfig, omega_band: tuple[float, float] = DEFAULT_OMEGA_BAND) -> float:
    """Per-block growth factor of this platoon's peak gain.

    Takes the block at the actual Fiedler eigenvalue, locates its peak
    frequency, and minimizes the block modulus there over gain ratios
    kappa in [1, lam_max/lam_min] from the actual spectrum.  The result
    exceeds one whenever the minimal block's peak gain does, and then the
    platoon's peak gain is at least ``zeta_min**(n-1)`` (up to the 1/mu_2
    input scaling).

    Raises
    ------
    ValueError
        "zeta undefined" when the minimal block's peak gain is not above 1.
    """
    rep, M, blocks, _ = _prepared(cfg)
    lam_min = rep.fiedler
    lam_max = rep.eigenvalues[-1]
    gamma, w0 = hinf_norm(_tf_response(blocks[0].tf), *omega_band)
    if gamma <= 1.0:
        raise ValueError("zeta undefined: minimal block peak gain does not exceed 1")
    ab = lam_min * rtf_eval(M, 1j * w0)
    return _zeta_search(ab.real, ab.imag, lam_max / lam_min)


def harmonic_test(cfg: PlatoonConfig,
                  omega_band: tuple[float, float] = DEFAULT_OMEGA_BAND) -> HarmonicVerdict:
    """Sufficient test for harmonic instability of the platoon family.

    Runs in three stages: every closed-loop block of the instantiated platoon
    must be stable (otherwise the verdict is "unstable-blocks" and the
    frequency analysis is skipped); the spectrum must admit a
    size-independent lower bound, i.e. max asymmetry < 1 (otherwise
    "test-inconclusive"); and the closed-loop block at that bound must have
    peak gain above one, which yields "harmonically-unstable".  The test is
    sufficient only: "test-inconclusive" never asserts stability.

    The per-platoon peak gain at the actual Fiedler eigenvalue is recorded in
    ``hinf_gamma_fiedler`` as a sharper, size-specific diagnostic.
    """
    rep, M, blocks, all_stable = _prepared(cfg)
    if not all_stable:
        return HarmonicVerdict(
            verdict=UNSTABLE_BLOCKS,
            fiedler=rep.fiedler,
            fiedler_lower=rep.fiedler_lower,
            lambda_min_used=None,
            hinf_gamma_min=None,
            hinf_gamma_fiedler=None,
            omega0=None,
            alpha=None,
            beta=None,
            zeta_min=None,
            omega_band=omega_band,
        )

    gamma_fiedler, _ = hinf_norm(_tf_response(blocks[0].tf), *omega_band)

    if rep.fiedler_lower is None:
        return HarmonicVerdict(
            verdict=TEST_INCONCLUSIVE,
            fiedler=rep.fiedler,
            fiedler_lower=None,
            lambda_min_used=None,
            hinf_gamma_min=None,
            hinf_gamma_fiedler=gamma_fiedler,
            omega0=None,
            alpha=None,
            beta=None,
            zeta_min=None,
            omega_band=omega_band,
        )

    lam_u = rep.fiedler_lower
    blk_u = make_block(lam_u, M)
    gamma_u, w0 = hinf_norm(_tf_response(blk_u.tf), *omega_band)
    ab = lam_u * rtf_eval(M, 1j * w0)
    zeta = None
    if gamma_u > 1.0:
        zeta = _zeta_search(ab.real, ab.imag, rep.eigenvalues[-1] / lam_u)
    return HarmonicVerdict(
        verdict=HARMONICALLY_UNSTABLE if gamma_u > 1.0 else TEST_INCONCLUSIVE,
        fiedler=rep.fiedler,
        fiedler_lower=rep.fiedler_lower,
        lambda_min_used=lam_u,
        hinf_gamma_min=gamma_u,
        hinf_gamma_fiedler=gamma_fiedler,
        omega0=w0,
        alpha=ab.real,
        beta=ab.imag,
        zeta_min=zeta,
        omega_band=omega_band,
    )


def instantiate_family(template: PlatoonConfig, n: int) -> PlatoonConfig:
    """Platoon of size ``n`` from a template's repeating gain/asymmetry rule.

    The template's trailing asymmetry is the structurally forced zero, not
    part of the rule, so it is excluded from the cycle whenever the template
    has more than one follower.
    """
    gain_rule = template.gains
    asym_rule = template.asymmetries[:-1] if len(template.asymmetries) > 1 else template.asymmetries
    gains = tuple(itertools.islice(itertools.cycle(gain_rule), n - 1))
    asym = tuple(itertools.islice(itertools.cycle(asym_rule), n - 1))
    return PlatoonConfig(
        n=n,
        gains=gains,
        asymmetries=asym,
        vehicle=template.vehicle,
        controller=template.controller,
        ref_distance=template.ref_distance,
    )


def gamma_sequence(template: PlatoonConfig, n_list,
                   omega_band: tuple[float, float] = DEFAULT_OMEGA_BAND) -> list[GammaPoint]:
    """Peak platoon gain for each size in ``n_list``.

    For every n the template is instantiated, gamma_n is the peak of the
    product-form response over the band, and the per-block growth factor is
    attached when defined (None when the minimal block does not peak above 1).
    """
    points = []
    for n in n_list:
        cfg = instantiate_family(template, int(n))
        gamma, _ = hinf_norm(lambda w: product_response(cfg, w), *omega_band)
        try:
            zeta = zeta_min(cfg, omega_band)
        except ValueError:
            zeta = None
        points.append(GammaPoint(
            n=int(n),
            gamma=gamma,
            gamma_root_n=gamma ** (1.0 / n),
            zeta_min_lower=zeta,
        ))
    return points


def verify_eigen_identities(cfg: PlatoonConfig) -> tuple[np.ndarray, float]:
    """Numerical residuals of the eigenvector weight identities.

    With V the eigenvector matrix of the full Laplacian, g = V^-1 e_2 and
    h_i = g_i * V[n-1, i], the weights of the nonzero-eigenvalue blocks
    satisfy ``sum h_i lam_i^m = 0`` for m = 0..n-3 and
    ``sum h_i / lam_i = 1/mu_2``.  Returns the absolute residuals of the
    power sums and of the inverse sum.

    Raises
    ------
    ValueError
        "identities require simple eigenvalues" when two reduced eigenvalues
        are closer than 1e-8 (near-defective eigenvectors).
    """
    from .platoon import build_laplacian

    L = build_laplacian(cfg)
    n = cfg.n
    w, V = np.linalg.eig(L)
    if np.max(np.abs(w.imag)) > 1e-8:
        raise ValueError("identities require simple eigenvalues")
    w = w.real
    V = V.real
    k0 = int(np.argmin(np.abs(w)))
    keep = [k for k in range(n) if k != k0]
    lam = w[keep]
    if n > 2:
        gaps = np.abs(np.subtract.outer(lam, lam))[~np.eye(n - 1, dtype=bool)]
        if gaps.min() <= 1e-8:
            raise ValueError("identities require simple eigenvalues")
    g = np.linalg.solve(V, np.eye(n)[:, 1])
    h = (g * V[n - 1, :])[keep]
    power_res = np.array([abs(np.sum(h * lam ** m)) for m in range(0, n - 2)])
    inverse_res = abs(np.sum(h / lam) - 1.0 / cfg.gains[0])
    return power_res, float(inverse_res)


def frequency_series(cfg: PlatoonConfig, n_points: int = 400,
                     omega_band: tuple[float, float] = DEFAULT_OMEGA_BAND) -> FreqSeries:
    """Leader-to-last-vehicle frequency response mu_2*T on a log grid."""
    grid = np.logspace(math.log10(omega_band[0]), math.log10(omega_band[1]), n_points)
    values = cfg.gains[0] * product_response(cfg, grid)
    return FreqSeries(omegas=grid, values=values)


def write_freq_csv(series: FreqSeries, fh) -> None:
    """CSV emission: header omega_rad_s,re,im,mag_db at full double precision."""
    fh.write("omega_rad_s,re,im,mag_db\n")
    for w, v, db in zip(series.omegas, series.values, series.magnitudes_db):
        fh.write(f"{w:.17g},{v.real:.17g},{v.imag:.17g},{db:.17g}\n")
