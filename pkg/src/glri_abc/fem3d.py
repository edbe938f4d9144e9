"""Box-with-hole Helmholtz experiment in three dimensions.

The domain is prod_i (0, B_i + L h) with the closed unit cube removed. Cells
are cubes of edge h = 2**-ref. Each cell carries a tag per direction: 0 in
the physical region and l in the l-th absorbing layer past B_i. Tagged
directions use stretch gamma_l and N-point Gauss-Legendre integration;
physical directions use unit stretch and the (N+1)-point rule.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import abc_theory
from .errors import OriginError, SolveError, ABCError
from .fem1d import FULL, REDUCED, reference_matrices
from .linalg_sparse import SparseComplexSystem, solve_direct, solve_gmres
from .quadrature import gauss_legendre, gauss_lobatto_nodes, lagrange_basis

log = logging.getLogger(__name__)

BOX = (4, 2, 2)
DIRECT_DOF_LIMIT = 300_000
NORM_EXTRA_POINTS = 10


def exact_solution(s: complex, x) -> np.ndarray | complex:
    """exp(-s r) / r with r = |x|; ``x`` has shape (3,) or (..., 3)."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    if np.any(r == 0):
        raise OriginError("exact solution is singular at the origin")
    u = np.exp(-complex(s) * r) / r
    return complex(u) if np.ndim(u) == 0 else u


@dataclass(frozen=True)
class HexMesh:
    """Structured cube mesh of the box with a cubic hole.

    Attributes
    ----------
    L, ref : int
        Layer count per direction and refinement level.
    B : tuple of int
        Physical extents; B_i and 1 must be multiples of h.
    """

    L: int
    ref: int
    B: tuple = BOX

    def __post_init__(self):
        if self.L < 0:
            raise ValueError("L must be non-negative")
        if self.ref < 0:
            raise ValueError("ref must be non-negative")
        if len(self.B) != 3:
            raise ValueError("B needs three extents")
        for b in self.B:
            if Fraction(b) * 2 ** self.ref != int(Fraction(b) * 2 ** self.ref) or b <= 1:
                raise ValueError("each B_i must exceed 1 and be a multiple of h")

    @property
    def h(self) -> float:
        return 2.0 ** -self.ref

    @property
    def n_hole(self) -> int:
        """Cells per direction spanning the hole."""
        return 2 ** self.ref

    @property
    def n_phys(self) -> tuple:
        return tuple(int(b * 2 ** self.ref) for b in self.B)

    @property
    def shape(self) -> tuple:
        """Cells per direction, hole included."""
        return tuple(n + self.L for n in self.n_phys)

    def direction_tags(self, i: int) -> np.ndarray:
        """Tag of every cell slab along direction i: 0 physical, l in layer l."""
        c = np.arange(self.shape[i])
        return np.maximum(c - self.n_phys[i] + 1, 0)

    def cells(self) -> np.ndarray:
        """Integer (c1, c2, c3) of the cells that are not in the hole."""
        grid = np.indices(self.shape).reshape(3, -1).T
        hole = np.all(grid < self.n_hole, axis=1)
        return grid[~hole]

    def cell_tags(self, cells=None) -> np.ndarray:
        cells = self.cells() if cells is None else cells
        return np.stack([self.direction_tags(i)[cells[:, i]] for i in range(3)], axis=1)


class DofMap:
    """Global numbering of tensor Gauss-Lobatto nodes and boundary sets.

    Lattice index j along direction i lies in cell j // N at local node
    j % N. Nodes strictly inside the hole are dropped.
    """

    def __init__(self, mesh: HexMesh, N: int):
        if N < 1:
            raise ValueError("N must be >= 1")
        self.mesh, self.N = mesh, N
        self.lattice_shape = tuple(N * n + 1 for n in mesh.shape)
        edge = N * mesh.n_hole
        idx = np.indices(self.lattice_shape)
        keep = ~np.all(idx < edge, axis=0)
        self.number = np.full(self.lattice_shape, -1, dtype=np.int64)
        self.number[keep] = np.arange(int(keep.sum()))
        self.n_dofs = int(keep.sum())
        self.lattice = np.stack([ix[keep] for ix in idx], axis=1)

        top = np.array(self.lattice_shape) - 1
        self.outer = np.flatnonzero(np.any(self.lattice == top, axis=1))
        self.hole = np.flatnonzero(np.all(self.lattice <= edge, axis=1))
        self.symmetry = np.setdiff1d(
            np.flatnonzero(np.any(self.lattice == 0, axis=1)),
            np.union1d(self.outer, self.hole),
        )

    def axis_coordinates(self, i: int) -> np.ndarray:
        """Coordinates of every lattice index along direction i."""
        h, N = self.mesh.h, self.N
        j = np.arange(self.lattice_shape[i])
        ref = (gauss_lobatto_nodes(N) + 1.0) / 2.0
        cell = np.minimum(j // N, self.mesh.shape[i] - 1)
        loc = j - N * cell
        return (cell + ref[loc]) * h

    def coordinates(self, dofs=None) -> np.ndarray:
        lat = self.lattice if dofs is None else self.lattice[dofs]
        return np.stack([self.axis_coordinates(i)[lat[:, i]] for i in range(3)], axis=1)

    def cell_dofs(self, cells: np.ndarray) -> np.ndarray:
        """(n_cells, (N+1)**3) global dofs, local order x-major."""
        N = self.N
        loc = np.arange(N + 1)
        a, b, c = np.meshgrid(loc, loc, loc, indexing="ij")
        off = np.stack([a.ravel(), b.ravel(), c.ravel()], axis=1)
        lat = N * cells[:, None, :] + off[None, :, :]
        return self.number[lat[..., 0], lat[..., 1], lat[..., 2]]


def _direction_factors(N: int, h: float, physical: bool):
    M, K = reference_matrices(N, FULL if physical else REDUCED)
    return 0.5 * h * M, (2.0 / h) * K


def local_element_matrix(tags, s: complex, N: int, h: float, gamma_l) -> np.ndarray:
    """Element matrix of (1/prod g)(s^2 u w + sum g_i^2 u_i w_i) on one cube.

    Parameters
    ----------
    tags : sequence of 3 int
        Direction tags; 0 selects the physical rule and unit stretch.
    gamma_l : sequence
        Stretches of layers 1..L.
    """
    g = [1.0 if t == 0 else complex(gamma_l[t - 1]) for t in tags]
    fac = [_direction_factors(N, h, t == 0) for t in tags]
    (M1, K1), (M2, K2), (M3, K3) = fac
    s = complex(s)
    A = s * s * np.kron(np.kron(M1, M2), M3)
    A = A + g[0] ** 2 * np.kron(np.kron(K1, M2), M3)
    A = A + g[1] ** 2 * np.kron(np.kron(M1, K2), M3)
    A = A + g[2] ** 2 * np.kron(np.kron(M1, M2), K3)
    return A / (g[0] * g[1] * g[2])


def assemble_3d(mesh: HexMesh, s: complex, N: int, gamma_l=None, dofmap: DofMap | None = None):
    """Global system; cells sharing a tag triple share one local matrix.

    Returns the system and its DofMap. The x_i = 0 planes carry the natural
    condition, so no boundary integral is added.
    """
    if gamma_l is None:
        gamma_l = abc_theory.make_gamma_l_3d(s, N, mesh.L, mesh.h) if mesh.L else ()
    if len(gamma_l) != mesh.L:
        raise ValueError("need one stretch per layer")
    dm = dofmap or DofMap(mesh, N)
    cells = mesh.cells()
    tags = mesh.cell_tags(cells)
    dofs = dm.cell_dofs(cells)
    system = SparseComplexSystem(dm.n_dofs)
    uniq, inv = np.unique(tags, axis=0, return_inverse=True)
    inv = inv.ravel()
    rows, cols, vals = [], [], []
    for k, t in enumerate(uniq):
        A = local_element_matrix(t, s, N, mesh.h, gamma_l)
        d = dofs[inv == k]
        rows.append(np.repeat(d, A.shape[1], axis=1).ravel())
        cols.append(np.tile(d, (1, A.shape[0])).ravel())
        vals.append(np.broadcast_to(A.ravel(), (len(d), A.size)).ravel())
    system.add_triplets(np.concatenate(rows), np.concatenate(cols), np.concatenate(vals))
    return system, dm


def apply_bcs_3d(system: SparseComplexSystem, dofmap: DofMap, s: complex):
    """Zero on the outer faces and nodal exact values on the hole surface."""
    system.constrain(dofmap.outer, 0.0)
    system.constrain(dofmap.hole, exact_solution(s, dofmap.coordinates(dofmap.hole)))


def interpolant(dofmap: DofMap, s: complex) -> np.ndarray:
    return exact_solution(s, dofmap.coordinates())


def l2_error_physical(u: np.ndarray, dofmap: DofMap, s: complex, n_quad: int | None = None) -> float:
    """Relative L2 error of nodal field ``u`` over the fully physical cells,
    with an ``n_quad``-point Gauss-Legendre rule per direction. The default
    over-integrates enough for the smooth exact solution to be resolved to
    near machine precision on every supported mesh."""
    mesh = dofmap.mesh
    N = dofmap.N
    cells = mesh.cells()
    phys = np.all(mesh.cell_tags(cells) == 0, axis=1)
    cells = cells[phys]
    rule = gauss_legendre(N + NORM_EXTRA_POINTS if n_quad is None else n_quad)
    phi, _ = lagrange_basis(gauss_lobatto_nodes(N), rule.nodes)
    uc = np.asarray(u)[dofmap.cell_dofs(cells)].reshape(len(cells), N + 1, N + 1, N + 1)
    uq = np.einsum("ai,bj,ck,eabc->eijk", phi, phi, phi, uc, optimize=True)
    h = mesh.h
    xq = (rule.nodes + 1.0) * 0.5 * h
    x0 = cells * h
    X = x0[:, 0, None, None, None] + xq[None, :, None, None]
    Y = x0[:, 1, None, None, None] + xq[None, None, :, None]
    Z = x0[:, 2, None, None, None] + xq[None, None, None, :]
    X, Y, Z = np.broadcast_arrays(X, Y, Z)
    ue = exact_solution(s, np.stack([X, Y, Z], axis=-1))
    w = np.einsum("i,j,k->ijk", rule.weights, rule.weights, rule.weights) * (0.5 * h) ** 3
    num = np.sum(w * np.abs(uq - ue) ** 2)
    den = np.sum(w * np.abs(ue) ** 2)
    return float(np.sqrt(num / den))


@dataclass
class Solution3D:
    values: np.ndarray
    dofmap: DofMap
    s: complex
    solve_info: dict | None = None

    def error(self) -> float:
        return l2_error_physical(self.values, self.dofmap, self.s)


def choose_solver(n_dofs: int, solver: str | None = None) -> str:
    if solver is None:
        return "direct" if n_dofs <= DIRECT_DOF_LIMIT else "gmres"
    if solver not in ("direct", "gmres"):
        raise ValueError(f"unknown solver {solver!r}")
    return solver


def solve_3d(mesh: HexMesh, s: complex, N: int, gamma_l=None, solver: str | None = None,
             gmres_tol: float = 1e-10) -> Solution3D:
    system, dm = assemble_3d(mesh, s, N, gamma_l)
    apply_bcs_3d(system, dm, s)
    method = choose_solver(dm.n_dofs, solver)
    try:
        if method == "direct":
            x = solve_direct(system)
        else:
            x = solve_gmres(system, tol=gmres_tol)
    except ABCError as exc:
        raise SolveError(f"3D solve failed (L={mesh.L}, ref={mesh.ref}, N={N}): {exc}") from exc
    return Solution3D(x, dm, complex(s), system.solve_info)


@dataclass
class ConvergenceResult:
    s: complex
    N: int
    ref: int
    errors: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    interpolation_error: float | None = None


def convergence_study(s: complex, N: int, ref: int, L_list, solver: str | None = None) -> ConvergenceResult:
    """One solve per L; failed solves are recorded rather than raised."""
    out = ConvergenceResult(complex(s), N, ref)
    for L in L_list:
        try:
            sol = solve_3d(HexMesh(L, ref), s, N, solver=solver)
            out.errors[L] = sol.error()
            log.info("N=%d ref=%d L=%d err=%.6e", N, ref, L, out.errors[L])
        except SolveError as exc:
            out.failures[L] = str(exc)
            log.warning("%s", exc)
    dm = DofMap(HexMesh(0, ref), N)
    out.interpolation_error = l2_error_physical(interpolant(dm, s), dm, s)
    return out


def format_dat(columns: dict) -> str:
    """dat text from ``{ref: {L: err}}``: one line "L,e1,e2,e3,e4" per L.

    Errors are written with the shortest round-trip repr; missing entries
    are empty fields.
    """
    Ls = sorted({L for col in columns.values() for L in col})
    lines = []
    for L in Ls:
        fields = [repr(float(columns[r][L])) if r in columns and L in columns[r] else ""
                  for r in (1, 2, 3, 4)]
        lines.append(",".join([str(L)] + fields))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_dat(text: str) -> dict:
    """Inverse of :func:`format_dat`."""
    cols: dict = {}
    for line in text.strip().splitlines():
        parts = line.split(",")
        L = int(parts[0])
        for r, f in enumerate(parts[1:], start=1):
            if f.strip():
                cols.setdefault(r, {})[L] = float(f)
    return cols
