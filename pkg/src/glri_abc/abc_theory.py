"""Closed-form reflection coefficients and approximate Sommerfeld impedances
for continuous, layerwise-constant and discretised (type (L, N)) absorbing
layers.

Sign conventions: a solution on the physical side is written as
``c_- exp(+gamma x) + c_+ exp(-gamma x)``; the reflection coefficient is
``c_- / c_+`` and the impedance ``Z`` is the coefficient in ``u' + Z u = 0``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BranchPointError, DegenerateError, PoleError
from .quadrature import gauss_legendre
from .specialfuncs import hyp1f1_trunc, pade_exp_neg, s_even, s_odd

_DEGENERATE_TOL = 1e-14


def gamma_branch(s: complex, k: float = 0.0) -> complex:
    """sqrt(s^2 + k^2) on the branch with gamma(0) = +k.

    The branch cuts lie on the imaginary axis beyond +-ik. On Re s = 0 the
    value is the limit from Re s > 0.
    """
    s = complex(s)
    k = float(k)
    if s.real < 0:
        raise ValueError("Re s must be non-negative")
    if k < 0:
        raise ValueError("k must be non-negative")
    if s.real > 0:
        # s^2 + k^2 never lies on the negative real axis here
        g = cmath.sqrt(s * s + k * k)
        return g if g.real > 0 else -g
    w = s.imag
    if abs(abs(w) - k) <= 1e-15 * max(1.0, k):
        raise BranchPointError(f"s={s} is a branch point for k={k}")
    if abs(w) < k:
        return complex(math.sqrt(k * k - w * w), 0.0)
    return complex(0.0, math.copysign(math.sqrt(w * w - k * k), w))


@dataclass(frozen=True)
class Frequency:
    s: complex
    k: float = 0.0
    gamma: complex = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "s", complex(self.s))
        object.__setattr__(self, "gamma", gamma_branch(self.s, self.k))

    @classmethod
    def from_gamma(cls, gamma: complex) -> "Frequency":
        """A one-dimensional frequency (k = 0) with gamma = s."""
        return cls(complex(gamma), 0.0)


@dataclass(frozen=True)
class LayerSpec:
    """Layer widths ``h`` and stretches ``gamma_l`` for layers 1..L; the
    physical reference cell has width ``h0`` and stretch 1."""

    N: int
    h: tuple
    gamma_l: tuple
    h0: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(float(v) for v in self.h))
        object.__setattr__(self, "gamma_l", tuple(complex(v) for v in self.gamma_l))
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if len(self.h) != len(self.gamma_l) or not self.h:
            raise ValueError("h and gamma_l must be non-empty and of equal length")
        if any(v <= 0 for v in self.h) or self.h0 <= 0:
            raise ValueError("layer widths must be positive")

    @property
    def L(self) -> int:
        return len(self.h)

    @classmethod
    def uniform(cls, N, L, gamma_1, h=1.0, h0=1.0):
        return cls(N, (h,) * L, (gamma_1,) * L, h0)

    def alphas(self, gamma: complex) -> np.ndarray:
        """alpha_0..alpha_L for the given gamma."""
        return np.array([alpha(gamma, l, self) for l in range(self.L + 1)])


def _gamma_of(freq) -> complex:
    return freq.gamma if isinstance(freq, Frequency) else complex(freq)


def alpha(freq, l: int, spec: LayerSpec) -> complex:
    """gamma * h_l / gamma_l, with l = 0 the physical reference cell."""
    g = _gamma_of(freq)
    if l == 0:
        return g * spec.h0
    if not 1 <= l <= spec.L:
        raise IndexError(f"layer index {l} outside 0..{spec.L}")
    return g * spec.h[l - 1] / spec.gamma_l[l - 1]


def reflection_continuous_pml(gamma: complex, chi_at_xL: complex) -> complex:
    return -cmath.exp(-complex(gamma) * complex(chi_at_xL)) ** 2


def sommerfeld_impedance_continuous_pml(gamma: complex, chi_at_xL: complex) -> complex:
    P = cmath.exp(-complex(gamma) * complex(chi_at_xL)) ** 2
    return _impedance(complex(gamma), P)


def _impedance(gamma, P):
    if abs(1 - P) < _DEGENERATE_TOL:
        raise DegenerateError("1 - P vanishes; impedance undefined")
    return gamma * (1 + P) / (1 - P)


def reflection_lwc(freq, spec: LayerSpec) -> complex:
    a = spec.alphas(_gamma_of(freq))
    r = -cmath.exp(-a[0])
    for al in a[1:]:
        r *= cmath.exp(-al) ** 2
    return r


def sommerfeld_impedance_lwc(freq, spec: LayerSpec) -> complex:
    g = _gamma_of(freq)
    P = complex(np.prod([cmath.exp(-al) ** 2 for al in spec.alphas(g)[1:]]))
    return _impedance(g, P)


def reflection_abc(freq, spec: LayerSpec) -> complex:
    """c_-/c_+ in the physical reference cell for a type (L, N) layer stack
    closed by a homogeneous Dirichlet termination."""
    a = spec.alphas(_gamma_of(freq))
    r = -pade_exp_neg(spec.N, a[0])
    for al in a[1:]:
        r *= pade_exp_neg(spec.N, al) ** 2
    return r


def sommerfeld_impedance_abc(freq, spec: LayerSpec) -> complex:
    g = _gamma_of(freq)
    P = 1.0 + 0j
    for al in spec.alphas(g)[1:]:
        P *= pade_exp_neg(spec.N, al) ** 2
    return _impedance(g, P)


def transfer_matrix_abc(N: int, alpha_l: complex, alpha_lplus1: complex) -> np.ndarray:
    """Diagonal map (c_{l,-}, c_{l,+}) -> (c_{l+1,-}, c_{l+1,+})."""
    d_minus = hyp1f1_trunc(N, -alpha_lplus1)
    d_plus = hyp1f1_trunc(N, alpha_lplus1)
    if abs(d_minus) < 1e-300 or abs(d_plus) < 1e-300:
        raise PoleError(f"alpha={alpha_lplus1} is a pole of the transfer relation")
    return np.diag([hyp1f1_trunc(N, alpha_l) / d_minus, hyp1f1_trunc(N, -alpha_l) / d_plus])


def s_matrix_pair(N: int, alpha_l: complex, alpha_lplus1: complex):
    """The two 2x2 matrices of the interface system acting on the
    (even, odd) coefficients of the left and right cells."""
    se, so = s_even(N, alpha_l), s_odd(N, alpha_l)
    te, to = s_even(N, alpha_lplus1), s_odd(N, alpha_lplus1)
    left = np.array([[se, so], [so, se]], dtype=complex)
    right = np.array([[te, -to], [-to, te]], dtype=complex)
    return left, right


PHI = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def phi_nodes(L: int) -> np.ndarray:
    """L angles in [0, pi/2): L-point Gauss-Legendre nodes mapped affinely."""
    xi = gauss_legendre(L).nodes
    return 0.25 * np.pi * (xi + 1.0)


def make_gamma_l_3d(s: complex, N: int, L: int, h: float) -> np.ndarray:
    """Layer stretches gamma_1..gamma_L for the box experiments."""
    if L < 1 or N < 1 or h <= 0:
        raise ValueError("need L >= 1, N >= 1, h > 0")
    phi = phi_nodes(L)
    c = np.cos(phi)
    return (c * complex(s) + np.sin(phi) ** 2 / c) * h / (N + 1)
