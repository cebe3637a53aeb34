"""Platoon Laplacian construction, its reduced spectrum, and eigenvalue bounds.

The platoon is a string of ``n`` vehicles.  Vehicle 1 is the leader and is
controlled externally, so its Laplacian row is zero.  Vehicle ``i`` (2..n)
weights the spacing error to its predecessor with ``mu_i > 0`` and the error
to its follower with ``mu_i * eps_i``; the trailing vehicle has no follower,
so its asymmetry is forced to zero.  Removing the leader's row and column
leaves a tridiagonal "reduced" Laplacian whose spectrum is real, nonnegative,
and equal to the nonzero spectrum of the full matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .numerics import RationalTF

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlatoonConfig:
    """Immutable description of one platoon.

    Parameters
    ----------
    n : int
        Vehicle count including the leader, n >= 2.
    gains : tuple of float
        mu_2 .. mu_n, coupling weight of each follower to its predecessor;
        all strictly positive, length n - 1.
    asymmetries : tuple of float
        eps_2 .. eps_n, rear/front weight ratio of each follower; nonnegative,
        length n - 1.  The last entry is forced to 0 (no follower behind).
    vehicle, controller : RationalTF
        Identical per-vehicle model G(s) and on-board controller C(s).
    ref_distance : float
        Desired inter-vehicle spacing in meters; used only for reconstructing
        absolute positions from simulated deviations.
    """

    n: int
    gains: tuple[float, ...]
    asymmetries: tuple[float, ...]
    vehicle: RationalTF
    controller: RationalTF
    ref_distance: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        object.__setattr__(self, "n", int(self.n))
        gains = tuple(float(g) for g in self.gains)
        asym = tuple(float(e) for e in self.asymmetries)
        if len(gains) != self.n - 1:
            raise ValueError(f"gains must have n-1 = {self.n - 1} entries, got {len(gains)}")
        if len(asym) != self.n - 1:
            raise ValueError(f"asymmetries must have n-1 = {self.n - 1} entries, got {len(asym)}")
        if not all(math.isfinite(g) and g > 0 for g in gains):
            raise ValueError("all gains must be finite and > 0")
        if not all(math.isfinite(e) and e >= 0 for e in asym):
            raise ValueError("all asymmetries must be finite and >= 0")
        # The trailing vehicle has no follower; its rear weight cannot act.
        asym = asym[:-1] + (0.0,)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "asymmetries", asym)
        object.__setattr__(self, "ref_distance", float(self.ref_distance))


@dataclass(frozen=True)
class SpectrumReport:
    """Sorted reduced-Laplacian eigenvalues plus analytic bounds."""

    eigenvalues: tuple[float, ...]
    fiedler: float
    gershgorin_upper: float
    fiedler_lower: float | None = None  # asymmetry-based uniform bound, None when eps_max >= 1


@dataclass(frozen=True)
class DominanceCertificate:
    """Row margins of the diagonally dominant similarity of the reduced Laplacian.

    ``p`` is the geometric scaling base of the similarity; ``row_margins`` are
    each row's diagonal minus the absolute off-diagonal sum after scaling, and
    ``lower_bound`` (their minimum) is a certified lower bound on every
    reduced-Laplacian eigenvalue.
    """

    p: float
    row_margins: tuple[float, ...]
    lower_bound: float


def build_laplacian(cfg: PlatoonConfig) -> np.ndarray:
    """Dense n-by-n platoon Laplacian: zero leader row, tridiagonal followers."""
    n = cfg.n
    mu = np.asarray(cfg.gains)
    eps = np.asarray(cfg.asymmetries)
    L = np.zeros((n, n))
    rows = np.arange(1, n)
    # The superdiagonal magnitude is derived from the rounded diagonal (within
    # one ulp of mu*eps) so that each row sums to zero exactly in floats.
    diag = mu + mu * eps
    sup = diag - mu
    L[rows, rows - 1] = -mu
    L[rows, rows] = diag
    L[rows[:-1], rows[:-1] + 1] = -sup[:-1]
    return L


def reduce_laplacian(L: np.ndarray) -> np.ndarray:
    """Drop the leader's row and column; keeps all nonzero eigenvalues."""
    return np.array(L[1:, 1:])


def spectrum(R: np.ndarray) -> SpectrumReport:
    """All eigenvalues of the reduced Laplacian, sorted ascending.

    The matrix is split into irreducible tridiagonal blocks wherever a
    superdiagonal entry is exactly zero (zero asymmetry decouples the rows
    above from the rows below).  Each irreducible block has positive
    subdiagonal*superdiagonal products and is symmetrized by the diagonal
    similarity with ratios d_{k+1}/d_k = sqrt(sub/super); eigenvalues of the
    symmetric tridiagonal blocks come from a standard implicit-shift
    tridiagonal eigensolver.  1x1 blocks contribute their diagonal directly.

    Raises
    ------
    ValueError
        On non-finite entries, a non-tridiagonal matrix, or a sign pattern
        that does not admit the symmetrizing similarity.
    """
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("reduced Laplacian must be square")
    if not np.all(np.isfinite(R)):
        raise ValueError("reduced Laplacian has non-finite entries")
    m = R.shape[0]
    if m > 2 and np.any(R[~np.eye(m, dtype=bool) & ~np.eye(m, k=1, dtype=bool) & ~np.eye(m, k=-1, dtype=bool)] != 0):
        raise ValueError("reduced Laplacian must be tridiagonal")

    diag = np.diag(R).copy()
    if m == 1:
        eigs = diag
    else:
        sup = np.diag(R, 1)
        sub = np.diag(R, -1)
        eigs = []
        start = 0
        cuts = [k + 1 for k in range(m - 1) if sup[k] == 0.0] + [m]
        for end in cuts:
            if end - start == 1:
                eigs.append(diag[start])
            else:
                prod = sub[start:end - 1] * sup[start:end - 1]
                if np.any(prod <= 0):
                    raise ValueError("off-diagonal sign pattern is not symmetrizable")
                off = np.sqrt(prod)
                eigs.extend(eigh_tridiagonal(diag[start:end], off, eigvals_only=True))
            start = end
        eigs = np.asarray(eigs)
    eigs = np.sort(eigs)
    return SpectrumReport(
        eigenvalues=tuple(float(x) for x in eigs),
        fiedler=float(eigs[0]),
        gershgorin_upper=float(2.0 * diag.max()),
    )


def fiedler_lower_bound(cfg: PlatoonConfig) -> float | None:
    """Size-independent lower bound on the reduced-Laplacian spectrum.

    With eps_max = max asymmetry, every eigenvalue is at least
    ``(1 - eps_max)**2 / (2 + 2*eps_max)`` regardless of the platoon length.
    Returns None when eps_max >= 1 (no such bound exists on this route).

    The guarantee is proved for gains mu_i >= 1; for smaller gains the
    certified bound scales by min(mu_i), which is logged as a warning.
    """
    eps_max = max(cfg.asymmetries)
    if eps_max >= 1.0:
        return None
    if min(cfg.gains) < 1.0:
        logger.warning(
            "min gain %.6g < 1: the certified lower bound scales by min(mu_i)",
            min(cfg.gains),
        )
    return (1.0 - eps_max) ** 2 / (2.0 + 2.0 * eps_max)


def spectrum_report(cfg: PlatoonConfig) -> SpectrumReport:
    """Spectrum of the reduced Laplacian with the asymmetry bound attached."""
    rep = spectrum(reduce_laplacian(build_laplacian(cfg)))
    return SpectrumReport(
        eigenvalues=rep.eigenvalues,
        fiedler=rep.fiedler,
        gershgorin_upper=rep.gershgorin_upper,
        fiedler_lower=fiedler_lower_bound(cfg),
    )


def dominance_certificate(cfg: PlatoonConfig) -> DominanceCertificate:
    """Diagonal-dominance certificate for the reduced-Laplacian spectrum.

    Scales the reduced Laplacian by the similarity P = diag(1, p, p^2, ...)
    with ``p = (1 + 1/eps_max) / 2`` and reports each row's Gershgorin-disk
    distance from zero.  Every margin is positive when eps_max < 1, which
    certifies the uniform lower bound returned by :func:`fiedler_lower_bound`.

    When eps_max == 0 the scaling base is infinite (pure predecessor
    following); the superdiagonal vanishes and the row margins reduce to the
    gains mu_i directly, which is the documented limit case.

    Raises
    ------
    ValueError
        When eps_max >= 1 ("certificate requires eps_max < 1").
    """
    eps_max = max(cfg.asymmetries)
    if eps_max >= 1.0:
        raise ValueError("certificate requires eps_max < 1")
    mu = np.asarray(cfg.gains)
    eps = np.asarray(cfg.asymmetries)
    m = cfg.n - 1

    if eps_max == 0.0:
        margins = mu.copy()
        return DominanceCertificate(
            p=math.inf,
            row_margins=tuple(float(x) for x in margins),
            lower_bound=float(margins.min()),
        )

    p = 0.5 * (1.0 + 1.0 / eps_max)
    R = reduce_laplacian(build_laplacian(cfg))
    # B = P^-1 R P, entrywise B[i,j] = R[i,j] * p**(j-i).  Only |j-i| <= 1 is
    # nonzero, so the scaled matrix stays bounded even though p**k overflows
    # for long platoons.
    powers = np.zeros((m, m))
    for k in (-1, 0, 1):
        idx = np.arange(max(0, -k), m - max(0, k))
        powers[idx, idx + k] = p ** float(k)
    B = R * powers

    # Scaled rows must reproduce [-mu/p, mu(1+eps), -p*mu*eps] exactly.
    rows = np.arange(m)
    expect_diag = mu * (1 + eps)
    expect_sub = np.where(rows > 0, -mu / p, 0.0)
    expect_sup = np.where(rows < m - 1, -p * mu * eps, 0.0)
    got_sub = np.concatenate([[0.0], np.diag(B, -1)])
    got_sup = np.concatenate([np.diag(B, 1), [0.0]])
    scale = np.maximum(1.0, np.abs(expect_diag) + np.abs(expect_sub) + np.abs(expect_sup))
    if np.any(np.abs(np.diag(B) - expect_diag) > 1e-12 * scale) or np.any(
        np.abs(got_sub - expect_sub) > 1e-12 * scale
    ) or np.any(np.abs(got_sup - expect_sup) > 1e-12 * scale):
        raise ValueError("scaled rows do not match the expected similarity pattern")

    margins = np.diag(B) - (np.abs(got_sub) + np.abs(got_sup))
    return DominanceCertificate(
        p=float(p),
        row_margins=tuple(float(x) for x in margins),
        lower_bound=float(margins.min()),
    )
