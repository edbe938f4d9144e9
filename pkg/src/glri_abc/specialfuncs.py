"""Jacobi polynomials, the terminating series 1F1(-N; -2N; z) and the
diagonal Pade approximant of the exponential built from it.

The identity used throughout is

    [N/N]_{exp(-z)} = 1F1(-N; -2N; -z) / 1F1(-N; -2N; +z),

so the zeros of the approximant are the roots of 1F1(-N; -2N; -z) and its
poles are their negatives.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, PoleError

MAX_PADE_ORDER = 16


@dataclass(frozen=True)
class ComplexPoly:
    """Polynomial with complex coefficients in ascending degree order."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(complex(v) for v in self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        if not c:
            c = (0j,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        # Horner
        acc = 0j
        for a in reversed(self.coeffs):
            acc = acc * z + a
        return acc

    def derivative(self) -> "ComplexPoly":
        return ComplexPoly(tuple(n * a for n, a in enumerate(self.coeffs))[1:] or (0,))

    def scale_argument(self, factor) -> "ComplexPoly":
        """Return p(factor * z)."""
        return ComplexPoly(tuple(a * factor**n for n, a in enumerate(self.coeffs)))


def jacobi_eval(n: int, p: int, q: int, zeta: float) -> float:
    """Evaluate the Jacobi polynomial P_n^{(p,q)} at ``zeta``.

    Uses the standard three-term recurrence in n. Works elementwise when
    ``zeta`` is an array.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    zeta = np.asarray(zeta, dtype=float) if np.ndim(zeta) else float(zeta)
    p0 = 1.0 + 0.0 * zeta
    if n == 0:
        return p0
    p1 = 0.5 * (2 * (p + 1) + (p + q + 2) * (zeta - 1))
    for m in range(2, n + 1):
        c = 2 * m + p + q
        a1 = 2 * m * (m + p + q) * (c - 2)
        a2 = (c - 1) * (p * p - q * q)
        a3 = (c - 2) * (c - 1) * c
        a4 = 2 * (m + p - 1) * (m + q - 1) * c
        p0, p1 = p1, ((a2 + a3 * zeta) * p1 - a4 * p0) / a1
    return p1


@lru_cache(maxsize=None)
def _hyp_coeffs_exact(N: int) -> tuple:
    # term n: (N!/(N-n)!) / ((2N)!/(2N-n)!) / n!, built incrementally
    coeffs = [Fraction(1)]
    c = Fraction(1)
    for n in range(1, N + 1):
        c = c * Fraction(N - n + 1, (2 * N - n + 1) * n)
        coeffs.append(c)
    return tuple(coeffs)


def hyp1f1_coeffs(N: int) -> np.ndarray:
    """Coefficients (ascending) of the degree-N polynomial 1F1(-N; -2N; z)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return np.array([float(c) for c in _hyp_coeffs_exact(N)])


def hyp1f1_poly(N: int, sign: int = +1) -> ComplexPoly:
    """1F1(-N; -2N; sign * z) as a ComplexPoly."""
    return ComplexPoly(tuple(hyp1f1_coeffs(N))).scale_argument(sign)


def hyp1f1_trunc(N: int, z):
    """Evaluate 1F1(-N; -2N; z); the series terminates after N+1 terms."""
    c = hyp1f1_coeffs(N)
    z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
    acc = 0j * z
    for a in c[::-1]:
        acc = acc * z + a
    return acc


def s_even(N: int, alpha):
    """Even-index part of the 1F1(-N; -2N; alpha) series."""
    c = hyp1f1_coeffs(N)
    alpha = complex(alpha)
    return sum(c[n] * alpha**n for n in range(0, N + 1, 2))


def s_odd(N: int, alpha):
    """Odd-index part of the 1F1(-N; -2N; alpha) series."""
    c = hyp1f1_coeffs(N)
    alpha = complex(alpha)
    return sum((c[n] * alpha**n for n in range(1, N + 1, 2)), 0j)


def pade_exp_neg(N: int, z) -> complex:
    """[N/N] Pade approximant of exp(-z).

    Raises
    ------
    PoleError
        If ``z`` is (numerically) a pole, i.e. 1F1(-N; -2N; z) vanishes.
    """
    den = hyp1f1_trunc(N, z)
    if abs(den) < 1e-300:
        raise PoleError(f"z={z!r} is a pole of the [{N}/{N}] Pade approximant of exp(-z)")
    return hyp1f1_trunc(N, -z) / den


def pade_zeros(N: int) -> list:
    """Zeros of [N/N]_{exp(-z)}, sorted by (real part, imaginary part).

    Computed as eigenvalues of the companion matrix of the monic form of
    1F1(-N; -2N; -z), then polished with two Newton steps.
    """
    if not 1 <= N <= MAX_PADE_ORDER:
        raise ValueError(f"N must be in [1, {MAX_PADE_ORDER}], got {N}")
    poly = hyp1f1_poly(N, -1)
    c = np.array(poly.coeffs)
    monic = c / c[-1]
    comp = np.zeros((N, N), dtype=complex)
    comp[1:, :-1] = np.eye(N - 1)
    comp[:, -1] = -monic[:-1]
    roots = np.linalg.eigvals(comp)

    dpoly = poly.derivative()
    polished = []
    for z in roots:
        for _ in range(2):
            d = dpoly(z)
            if d != 0:
                z = z - poly(z) / d
        scale = sum(abs(a) * abs(z) ** n for n, a in enumerate(poly.coeffs))
        if not abs(poly(z)) < 1e-10 * scale:
            raise ConvergenceError(f"root {z} of 1F1(-{N};-{2 * N};-z) failed residual check")
        polished.append(complex(z))

    # real polynomial: snap near-real roots and enforce exact conjugate pairs
    out = []
    for z in polished:
        if abs(z.imag) <= 1e-10 * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        out.append(z)
    pos = sorted((z for z in out if z.imag > 0), key=lambda z: (z.real, z.imag))
    real = [z for z in out if z.imag == 0]
    pairs = []
    for z in pos:
        pairs.extend([z.conjugate(), z])
    result = real + pairs
    if len(result) != N:
        raise ConvergenceError(f"could not pair the roots of 1F1(-{N};-{2 * N};-z) into conjugates")
    return sorted(result, key=lambda z: (z.real, z.imag))
