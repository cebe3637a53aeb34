"""Closed-form reduced-Laplacian eigenvalues for the homogeneous platoon.

For unit gains and one common asymmetry ``eps`` in (0, 1), every eigenvalue of
the reduced Laplacian is ``1 + eps - 2*sqrt(eps)*cos(theta_i)`` where the
angles theta_i are the n-1 roots in (0, pi) of

    f(theta) = sin((n-1)*theta) - sqrt(1/eps) * sin(n*theta).

Here ``n`` counts all vehicles including the leader; the sine arguments are
the follower count n-1 and its successor.  This parametrization matches the
numerical spectrum of the reduced Laplacian elementwise (the trailing row has
zero asymmetry), which is the cross-check this module exists to provide: an
independent oracle for the spectral solver, and the source of the explicit
bounds ``(1 - sqrt(eps))**2 <= lambda <= (1 + sqrt(eps))**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ThetaRoots:
    """The n-1 angle parameters of the homogeneous closed form, ascending."""

    thetas: tuple[float, ...]
    epsilon: float


def _residual(theta, n: int, eps: float):
    return np.sin((n - 1) * theta) - math.sqrt(1.0 / eps) * np.sin(n * theta)


def solve_thetas(n: int, eps: float) -> ThetaRoots:
    """All n-1 roots of the angle equation in the open interval (0, pi).

    Roots are bracketed by sign changes on a uniform grid of 64*n points and
    polished by bisection to a residual below 1e-12.  If bracketing does not
    find exactly n-1 roots the grid is refined once by a factor of 4 before
    failing.

    Raises
    ------
    ValueError
        If n < 2, eps is outside (0, 1), or bracketing fails.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")

    for gridmult in (64, 256):
        grid = np.linspace(0.0, math.pi, gridmult * n + 1)[1:-1]
        vals = _residual(grid, n, eps)
        exact = grid[vals == 0.0]
        flips = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
        if len(exact) + len(flips) == n - 1:
            lo = grid[flips]
            hi = grid[flips + 1]
            flo = vals[flips]
            # vectorized bisection; interval shrinks to ~1 ulp in < 60 steps
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fmid = _residual(mid, n, eps)
                left = flo * fmid > 0.0
                lo = np.where(left, mid, lo)
                flo = np.where(left, fmid, flo)
                hi = np.where(left, hi, mid)
                if np.all(np.abs(fmid) <= 1e-13) or np.all(hi - lo <= 1e-15):
                    break
            roots = np.sort(np.concatenate([exact, 0.5 * (lo + hi)]))
            return ThetaRoots(thetas=tuple(float(t) for t in roots), epsilon=float(eps))
    raise ValueError(
        f"root bracketing failed: expected {n - 1} roots, "
        f"found {len(exact) + len(flips)} for n={n}, eps={eps}"
    )


def closedform_eigenvalues(n: int, eps: float) -> np.ndarray:
    """Reduced-Laplacian eigenvalues of the homogeneous platoon, ascending.

    Every value lies inside [(1 - sqrt(eps))**2, (1 + sqrt(eps))**2]; the
    cosine is monotone on the sorted angles, so the output is sorted too.
    """
    roots = solve_thetas(n, eps)
    th = np.asarray(roots.thetas)
    return 1.0 + eps - 2.0 * math.sqrt(eps) * np.cos(th)
