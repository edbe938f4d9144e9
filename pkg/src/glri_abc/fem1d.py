"""One-dimensional Q_N discretisation of the stretched Helmholtz operator

    (gamma^2 / g) u w + g u' w'

on Gauss-Lobatto Lagrange elements, with per-cell stretch g and a per-cell
choice between N-point (reduced) and (N+1)-point (full) Gauss-Legendre
quadrature, plus extraction of the discrete reflection coefficient.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from . import abc_theory
from .errors import ABCError, DegenerateError, PoleError, SolveError
from .linalg_sparse import SparseComplexSystem, solve_direct
from .quadrature import full_rule, gauss_legendre, gauss_lobatto_nodes, lagrange_basis, reduced_rule
from .specialfuncs import hyp1f1_trunc, jacobi_eval, pade_zeros, s_even, s_odd

DEGENERATE_RTOL = 1e-12
REDUCED = "reduced"
FULL = "full"


@dataclass
class Mesh1D:
    """Cells [vertices[c], vertices[c+1]] with stretch ``stretch[c]`` and
    quadrature mode ``quad[c]`` ("reduced" or "full")."""

    vertices: np.ndarray
    stretch: np.ndarray
    quad: list = field(default=None)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.stretch = np.asarray(self.stretch, dtype=complex)
        if self.quad is None:
            self.quad = [REDUCED] * self.n_cells
        self.quad = list(self.quad)
        if len(self.vertices) != len(self.stretch) + 1:
            raise ValueError("need exactly one more vertex than cells")
        if np.any(np.diff(self.vertices) <= 0):
            raise ValueError("vertices must be strictly increasing")
        if len(self.quad) != self.n_cells or any(q not in (REDUCED, FULL) for q in self.quad):
            raise ValueError("quad must give 'reduced' or 'full' for every cell")
        if not np.any(self.stretch == 1):
            raise ValueError("at least one physical cell (stretch 1) is required")

    @property
    def n_cells(self) -> int:
        return len(self.stretch)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.vertices)

    @classmethod
    def layered(cls, spec: abc_theory.LayerSpec, n_physical: int = 1, physical_quad: str = REDUCED,
                x0: float = 0.0) -> "Mesh1D":
        """``n_physical`` cells of width ``spec.h0`` ending at ``x0``, followed
        by the absorbing layers of ``spec`` (always reduced)."""
        left = x0 - spec.h0 * np.arange(n_physical, 0, -1)
        right = x0 + np.cumsum(spec.h)
        verts = np.concatenate([left, [x0], right])
        stretch = np.concatenate([np.ones(n_physical), spec.gamma_l])
        quad = [physical_quad] * n_physical + [REDUCED] * spec.L
        return cls(verts, stretch, quad)

    @classmethod
    def two_cell(cls, gamma_1: complex) -> "Mesh1D":
        """Physical cell [-1, 0] and one absorbing layer [0, 1]."""
        return cls([-1.0, 0.0, 1.0], [1.0, gamma_1], [REDUCED, REDUCED])


def n_dofs(mesh: Mesh1D, N: int) -> int:
    return mesh.n_cells * N + 1


def cell_dofs(c: int, N: int) -> np.ndarray:
    return np.arange(c * N, c * N + N + 1)


def node_coordinates(mesh: Mesh1D, N: int) -> np.ndarray:
    xi = gauss_lobatto_nodes(N)
    x = np.empty(n_dofs(mesh, N))
    for c in range(mesh.n_cells):
        a, b = mesh.vertices[c], mesh.vertices[c + 1]
        x[cell_dofs(c, N)] = 0.5 * ((1 - xi) * a + (1 + xi) * b)
    return x


@lru_cache(maxsize=None)
def reference_matrices(N: int, mode: str):
    """Reference mass and stiffness on [-1, 1] for the Gauss-Lobatto basis:
    sum_q w_q phi_i phi_j and sum_q w_q phi_i' phi_j'.

    Evaluated in extended precision and rounded once; the reduced-integration
    cancellations are sensitive to entry rounding when the layers amplify.
    """
    n_q = N if mode == REDUCED else N + 1
    M, K = _reference_matrices_mp(N, n_q)
    M.setflags(write=False)
    K.setflags(write=False)
    return M, K


def _reference_matrices_mp(N, n_q, dps=40):
    import mpmath

    with mpmath.workdps(dps):
        def polish(x0, f, df):
            x = mpmath.mpf(x0)
            for _ in range(4):
                x = x - f(x) / df(x)
            return x

        leg = lambda n, x: mpmath.legendre(n, x)
        dleg = lambda n, x: n * (leg(n - 1, x) - x * leg(n, x)) / (1 - x * x)
        d2leg = lambda n, x: (2 * x * dleg(n, x) - n * (n + 1) * leg(n, x)) / (1 - x * x)

        rule = gauss_legendre(n_q)
        xq = [polish(x, lambda t: leg(n_q, t), lambda t: dleg(n_q, t)) for x in rule.nodes]
        wq = [2 / ((1 - x * x) * dleg(n_q, x) ** 2) for x in xq]
        xl = [mpmath.mpf(-1)]
        xl += [polish(x, lambda t: dleg(N, t), lambda t: d2leg(N, t)) for x in gauss_lobatto_nodes(N)[1:-1]]
        xl += [mpmath.mpf(1)]

        def basis(x):
            vals, ders = [], []
            for i in range(N + 1):
                others = [j for j in range(N + 1) if j != i]
                den = mpmath.fprod(xl[i] - xl[j] for j in others)
                vals.append(mpmath.fprod(x - xl[j] for j in others) / den)
                ders.append(mpmath.fsum(
                    mpmath.fprod(x - xl[k] for k in others if k != j) for j in others) / den)
            return vals, ders

        tab = [basis(x) for x in xq]
        M = np.empty((N + 1, N + 1))
        K = np.empty((N + 1, N + 1))
        for i in range(N + 1):
            for j in range(N + 1):
                M[i, j] = float(mpmath.fsum(w * v[i] * v[j] for w, (v, _) in zip(wq, tab)))
                K[i, j] = float(mpmath.fsum(w * d[i] * d[j] for w, (_, d) in zip(wq, tab)))
    return M, K


def local_mass_stiffness(N: int, h: float, mode: str = REDUCED):
    """Physical-cell mass and stiffness for a cell of width ``h``."""
    M, K = reference_matrices(N, mode)
    return 0.5 * h * M, (2.0 / h) * K


def local_matrix(mesh: Mesh1D, c: int, gamma: complex, N: int) -> np.ndarray:
    g = mesh.stretch[c]
    M, K = local_mass_stiffness(N, mesh.widths[c], mesh.quad[c])
    return (gamma * gamma / g) * M + g * K


def assemble_1d(mesh: Mesh1D, gamma: complex, N: int) -> SparseComplexSystem:
    if N < 1:
        raise ValueError("N must be >= 1")
    gamma = complex(gamma)
    system = SparseComplexSystem(n_dofs(mesh, N))
    rows, cols, vals = [], [], []
    for c in range(mesh.n_cells):
        d = cell_dofs(c, N)
        R, C = np.meshgrid(d, d, indexing="ij")
        rows.append(R.ravel())
        cols.append(C.ravel())
        vals.append(local_matrix(mesh, c, gamma, N).ravel())
    system.add_triplets(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
    return system


DIRICHLET_ZERO = "dirichlet_zero"
TRANSFORMED_SOMMERFELD = "transformed_sommerfeld"


def apply_bcs_1d(system: SparseComplexSystem, left: complex = 1.0, right: str = DIRICHLET_ZERO,
                 gamma: complex | None = None):
    """Dirichlet data ``left`` at the first dof and a termination at the last.

    ``right="transformed_sommerfeld"`` closes the outermost layer with the
    weak condition g u' + gamma u = 0, i.e. adds ``gamma`` to the last
    diagonal entry; ``gamma`` is then required.
    """
    system.constrain(0, left)
    last = system.n - 1
    if right == DIRICHLET_ZERO:
        system.constrain(last, 0.0)
    elif right == TRANSFORMED_SOMMERFELD:
        if gamma is None:
            raise ValueError("transformed Sommerfeld termination needs gamma")
        system.add_to_diagonal(last, complex(gamma))
    else:
        raise ValueError(f"unknown right boundary {right!r}")


@dataclass
class Solution1D:
    values: np.ndarray
    mesh: Mesh1D
    N: int

    def cell_values(self, c: int) -> np.ndarray:
        return self.values[cell_dofs(c, self.N)]

    def vertex_value(self, v: int) -> complex:
        return self.values[v * self.N]


def solve_1d(mesh: Mesh1D, gamma: complex, N: int, left: complex = 1.0,
             right: str = DIRICHLET_ZERO) -> Solution1D:
    system = assemble_1d(mesh, gamma, N)
    apply_bcs_1d(system, left, right, gamma)
    return Solution1D(solve_direct(system, refine=3), mesh, N)


def _check_reference_cell(mesh: Mesh1D, c: int):
    if mesh.quad[c] != REDUCED or mesh.stretch[c] != 1:
        raise ValueError("reflection extraction needs a reduced-integration cell with unit stretch")


def extract_reflection(sol: Solution1D, cell: int, gamma: complex, N: int | None = None) -> complex:
    """c_-/c_+ of the discrete wave in ``cell`` from its two vertex values.

    Within a reduced-integration cell the solution is
    c_even*S_even + c_odd*S_odd-type, so the vertex values determine
    (c_even, c_odd) and hence the incoming/outgoing pair.
    """
    N = sol.N if N is None else N
    mesh = sol.mesh
    _check_reference_cell(mesh, cell)
    a0 = complex(gamma) * mesh.widths[cell]
    ul = sol.vertex_value(cell)
    ur = sol.vertex_value(cell + 1)
    se, so = s_even(N, a0), s_odd(N, a0)
    # S_even = 0 or S_odd = 0 means [N/N](a0) = -1 or +1: the incoming and
    # outgoing discrete waves coincide and R is undefined
    if min(abs(se), abs(so)) <= DEGENERATE_RTOL * max(abs(se), abs(so)):
        raise DegenerateError("incoming and outgoing discrete waves coincide in this cell")
    c_even = (ur + ul) / (2 * se)
    c_odd = (ur - ul) / (2 * so)
    c_minus = (c_even + c_odd) / math.sqrt(2)
    c_plus = (c_even - c_odd) / math.sqrt(2)
    if abs(c_plus) < 1e-300:
        raise DegenerateError("outgoing amplitude vanishes")
    return c_minus / c_plus


def condensed_vertex_matrix(mesh: Mesh1D, c: int, gamma: complex, N: int) -> np.ndarray:
    """2x2 Schur complement of the local matrix onto the two vertex dofs."""
    A = local_matrix(mesh, c, gamma, N)
    v = [0, N]
    if N == 1:
        return A
    i = list(range(1, N))
    return A[np.ix_(v, v)] - A[np.ix_(v, i)] @ np.linalg.solve(A[np.ix_(i, i)], A[np.ix_(i, v)])


def cell_transfer(mesh: Mesh1D, c: int, gamma: complex, N: int):
    """Vertex-to-vertex transfer matrix of a chain of copies of cell ``c``
    and its eigenpairs, ordered (incoming, outgoing)."""
    S = condensed_vertex_matrix(mesh, c, gamma, N)
    a, b, d = S[0, 0], S[0, 1], S[1, 1]
    if b == 0:
        raise DegenerateError("condensed coupling vanishes")
    T = np.array([[0.0, 1.0], [-S[1, 0] / b, -(a + d) / b]], dtype=complex)
    lam, vec = np.linalg.eig(T)
    # a defective 2x2 splits its double eigenvalue by about sqrt(eps)
    if abs(lam[0] - lam[1]) <= 1e-6 * max(abs(lam[0]), abs(lam[1]), 1e-300):
        raise DegenerateError("defective vertex transfer relation")
    # outgoing = decaying to the right; tie-break on the unit circle by
    # proximity to the continuous decay factor
    m0, m1 = abs(lam[0]), abs(lam[1])
    if abs(m0 - m1) > 1e-12 * max(m0, m1):
        out = 0 if m0 < m1 else 1
    else:
        e = cmath.exp(-complex(gamma) * mesh.widths[c] / mesh.stretch[c])
        out = 0 if abs(lam[0] - e) < abs(lam[1] - e) else 1
    order = [1 - out, out]
    return T, lam[order], vec[:, order]


def extract_reflection_matrix(sol: Solution1D, cell: int, gamma: complex) -> complex:
    """Same quantity as :func:`extract_reflection`, obtained from the local
    matrix: the vertex pair is split along the eigenvectors of the condensed
    transfer relation, with amplitudes referred to the cell midpoint."""
    mesh, N = sol.mesh, sol.N
    _check_reference_cell(mesh, cell)
    _, lam, _ = cell_transfer(mesh, cell, gamma, N)
    lam_in, lam_out = lam
    ul, ur = sol.vertex_value(cell), sol.vertex_value(cell + 1)
    # (ul, ur) = A (1, lam_in) + B (1, lam_out)
    B = (ur - lam_in * ul) / (lam_out - lam_in)
    A = ul - B
    if abs(B) < 1e-300:
        raise DegenerateError("outgoing amplitude vanishes")
    return (A / B) / lam_out


def jacobi_coefficients(sol: Solution1D, cell: int, gamma: complex) -> np.ndarray:
    """Coefficients c_0..c_N of the cell solution in the basis
    alpha^n (2N-n)!/(2N)! P_n^{(N-n,N-n)}(zeta), alpha = gamma h / g."""
    mesh, N = sol.mesh, sol.N
    a = complex(gamma) * mesh.widths[cell] / mesh.stretch[cell]
    xi = gauss_lobatto_nodes(N)
    B = np.empty((N + 1, N + 1), dtype=complex)
    for n in range(N + 1):
        scale = a**n * math.factorial(2 * N - n) / math.factorial(2 * N)
        B[:, n] = scale * jacobi_eval(n, N - n, N - n, xi)
    return np.linalg.solve(B, sol.cell_values(cell))


def weak_flux(sol: Solution1D, cell: int, gamma: complex) -> complex:
    """Weakly imposed derivative at the left vertex of ``cell``:
    minus the cell's (reduced) integral of (gamma^2/g) u w + g u' w' with w
    the linear hat equal to one at that vertex."""
    mesh, N = sol.mesh, sol.N
    rule = reduced_rule(N) if mesh.quad[cell] == REDUCED else full_rule(N)
    h = mesh.widths[cell]
    g = mesh.stretch[cell]
    phi, dphi = lagrange_basis(gauss_lobatto_nodes(N), rule.nodes)
    u = sol.cell_values(cell) @ phi
    du = (sol.cell_values(cell) @ dphi) * (2.0 / h)
    w = 0.5 * (1 - rule.nodes)
    dw = -1.0 / h
    integrand = (complex(gamma) ** 2 / g) * u * w + g * du * dw
    return -0.5 * h * np.sum(rule.weights * integrand)


def weak_flux_impedance(sol: Solution1D, cell: int, gamma: complex) -> complex:
    """Z such that [u']_weak + Z u = 0 at the left vertex of ``cell``."""
    return -weak_flux(sol, cell, gamma) / sol.vertex_value(cell)


class ReflectionPoint(NamedTuple):
    gamma: complex
    reflection: complex
    near_pole: bool
    error: str | None


@dataclass(frozen=True)
class Grid:
    re_min: float = 0.0
    re_max: float = 8.0
    im_min: float = -8.0
    im_max: float = 8.0
    nx: int = 9
    ny: int = 9

    def points(self) -> list:
        """Cell-centred sample points, row-major with real part fastest."""
        re = self.re_min + (np.arange(self.nx) + 0.5) * (self.re_max - self.re_min) / self.nx
        im = self.im_min + (np.arange(self.ny) + 0.5) * (self.im_max - self.im_min) / self.ny
        return [complex(r, i) for i in im for r in re]


def near_pade_pole(N: int, z: complex, tol: float = 1e-8) -> bool:
    """True if z is within ``tol`` of a pole of [N/N]_{exp(-z)}."""
    return any(abs(z + zn) < tol for zn in pade_zeros(N))


def reflection_at(N: int, gamma_1: complex, gamma: complex, right: str = DIRICHLET_ZERO) -> complex:
    """Extracted reflection for the two-cell experiment at one gamma."""
    sol = solve_1d(Mesh1D.two_cell(gamma_1), gamma, N, 1.0, right)
    return extract_reflection(sol, 0, gamma)


def reflection_map(N: int, gamma_1: complex, grid: Grid = Grid()) -> list:
    rows = []
    for g in grid.points():
        flagged = near_pade_pole(N, g / gamma_1) or near_pade_pole(N, g)
        try:
            r = reflection_at(N, gamma_1, g)
            rows.append(ReflectionPoint(g, r, flagged, None))
        except (ABCError, np.linalg.LinAlgError, ValueError) as exc:
            rows.append(ReflectionPoint(g, complex("nan"), True, str(exc)))
    return rows


def write_reflection_csv(rows: Sequence[ReflectionPoint], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_gamma", "im_gamma", "abs_reflection"])
        for p in rows:
            w.writerow([f"{p.gamma.real:.10g}", f"{p.gamma.imag:.10g}", f"{abs(p.reflection):.10g}"])
