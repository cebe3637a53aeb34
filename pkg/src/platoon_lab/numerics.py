"""Real-coefficient polynomials and rational transfer functions in the Laplace variable.

Coefficients are stored ascending: ``coeffs[k]`` multiplies ``s**k``, so the
index equals the power.  The zero polynomial is represented as ``(0.0,)``.
No pole-zero cancellation is ever performed on rational functions; a common
factor between numerator and denominator is kept verbatim because cancelling
it could hide an unstable mode from later stability checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Trailing (highest-power) coefficients at or below this fraction of the
# largest coefficient are treated as round-off and dropped.
_TRIM_REL = 1e-14


def _normalize(coeffs) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    if not c:
        raise ValueError("polynomial needs at least one coefficient")
    if not all(np.isfinite(c)):
        raise ValueError("polynomial coefficients must be finite")
    top = max(abs(x) for x in c)
    if top == 0.0:
        return (0.0,)
    while len(c) > 1 and abs(c[-1]) <= _TRIM_REL * top:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with ascending coefficients, normalized on construction."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _normalize(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (0.0,)


def _as_poly(p) -> Polynomial:
    return p if isinstance(p, Polynomial) else Polynomial(tuple(p))


@dataclass(frozen=True)
class RationalTF:
    """Ratio of two real polynomials in s.  The denominator must be nonzero."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        object.__setattr__(self, "num", _as_poly(self.num))
        object.__setattr__(self, "den", _as_poly(self.den))
        if self.den.is_zero:
            raise ValueError("rational transfer function denominator is identically zero")


def poly_eval(p: Polynomial, s):
    """Evaluate ``p`` at a complex point (or ndarray of points) by Horner's rule."""
    p = _as_poly(p)
    acc = np.zeros_like(s) if isinstance(s, np.ndarray) else 0.0
    for c in reversed(p.coeffs):
        acc = acc * s + c
    return acc


def poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    """Product of two polynomials (coefficient convolution)."""
    a, b = _as_poly(a), _as_poly(b)
    return Polynomial(tuple(np.convolve(a.coeffs, b.coeffs)))


def poly_add_scaled(a: Polynomial, b: Polynomial, c: float) -> Polynomial:
    """Coefficient-wise ``a + c*b`` with zero padding to the longer length."""
    a, b = _as_poly(a), _as_poly(b)
    n = max(len(a.coeffs), len(b.coeffs))
    out = np.zeros(n)
    out[: len(a.coeffs)] = a.coeffs
    out[: len(b.coeffs)] += c * np.asarray(b.coeffs)
    return Polynomial(tuple(out))


def poly_roots(p: Polynomial) -> list[complex]:
    """All complex roots of ``p`` via eigenvalues of the monic companion matrix.

    Roots are returned sorted by (real, imag) for reproducibility.  Each root
    ``r`` satisfies ``|p(r)| <= 1e-8 * ||coeffs||`` at the degrees this library
    works with (<= 10).

    Raises
    ------
    ValueError
        If ``p`` is constant or identically zero ("no roots defined").
    """
    p = _as_poly(p)
    if p.degree < 1:
        raise ValueError("no roots defined for a constant or zero polynomial")
    c = np.asarray(p.coeffs, dtype=float)
    monic = c / c[-1]
    n = p.degree
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -monic[:-1]
    roots = np.linalg.eigvals(comp)
    return sorted((complex(r) for r in roots), key=lambda z: (z.real, z.imag))


def rtf_eval(t: RationalTF, s):
    """Evaluate ``t`` at ``s`` (scalar or ndarray); raises at an exact pole."""
    den = poly_eval(t.den, s)
    if np.any(den == 0):
        raise ValueError(f"pole at evaluation point s={s}")
    return poly_eval(t.num, s) / den
