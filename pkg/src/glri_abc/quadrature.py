"""Gauss-Legendre rules and Gauss-Lobatto nodes on [-1, 1], plus Lagrange
cardinal bases on arbitrary node sets."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f):
        return np.sum(self.weights * f(self.nodes))


def _legendre_and_derivative(n, x):
    """P_n(x) and P_n'(x) via the three-term recurrence."""
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    # (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    dp = n * (p0 - x * p1) / (1.0 - x * x)
    return p1, dp


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    k = np.arange(1, n + 1)
    # Chebyshev-type initial guess (ascending)
    x = -np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    else:
        raise ConvergenceError(f"Gauss-Legendre Newton iteration failed for n={n}")
    x = 0.5 * (x - x[::-1])  # exact symmetry
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule; nodes are the zeros of P_n."""
    if not 1 <= n <= 32:
        raise ValueError(f"n must be in [1, 32], got {n}")
    x, w = _gauss_legendre(n)
    return QuadratureRule(x, w, 2 * n - 1)


def reduced_rule(N: int) -> QuadratureRule:
    """The N-point rule used on degree-N cells of the absorbing layers."""
    return gauss_legendre(N)


def full_rule(N: int) -> QuadratureRule:
    """The (N+1)-point rule used for full integration of degree-N cells."""
    return gauss_legendre(N + 1)


@lru_cache(maxsize=None)
def _gauss_lobatto(order):
    if order == 1:
        x = np.array([-1.0, 1.0])
    else:
        x = -np.cos(np.pi * np.arange(order + 1) / order)
        inner = x[1:-1].copy()
        for _ in range(_NEWTON_MAXIT):
            p, dp = _legendre_and_derivative(order, inner)
            # Legendre ODE: (1 - x^2) P'' = 2x P' - n(n+1) P
            d2p = (2 * inner * dp - order * (order + 1) * p) / (1.0 - inner * inner)
            dx = dp / d2p
            inner = inner - dx
            if np.max(np.abs(dx)) < _NEWTON_TOL:
                break
        else:
            raise ConvergenceError(f"Gauss-Lobatto Newton iteration failed for order={order}")
        x = np.concatenate([[-1.0], 0.5 * (inner - inner[::-1]), [1.0]])
    x.setflags(write=False)
    return x


def gauss_lobatto_nodes(order: int) -> np.ndarray:
    """The order+1 Gauss-Lobatto nodes, endpoints included, ascending."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return _gauss_lobatto(order)


def lagrange_basis(nodes, zeta):
    """Cardinal Lagrange polynomials on ``nodes`` and their derivatives.

    Parameters
    ----------
    nodes : array_like, shape (m,)
        Pairwise distinct interpolation nodes.
    zeta : float or array_like, shape (q,)
        Evaluation points.

    Returns
    -------
    values, derivatives : ndarray
        Shape (m,) for scalar ``zeta``; otherwise (m, q) with
        ``values[i, k]`` the i-th cardinal function at ``zeta[k]``.
    """
    nodes = np.asarray(nodes, dtype=float)
    scalar = np.ndim(zeta) == 0
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    m = len(nodes)
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    denom = np.prod(diff, axis=1)

    values = np.empty((m, len(z)))
    derivs = np.zeros((m, len(z)))
    dz = z[None, :] - nodes[:, None]  # (m, q)
    for i in range(m):
        others = [j for j in range(m) if j != i]
        values[i] = np.prod(dz[others], axis=0) / denom[i]
        for j in others:
            rest = [k for k in others if k != j]
            derivs[i] += np.prod(dz[rest], axis=0) if rest else 1.0
        derivs[i] /= denom[i]
    if scalar:
        return values[:, 0], derivs[:, 0]
    return values, derivs
