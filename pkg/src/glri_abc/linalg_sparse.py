"""Complex sparse systems: triplet assembly, Dirichlet constraints, a sparse
LU direct solve and restarted GMRES with Jacobi or ILU(0) preconditioning."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numba
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import BreakdownError, MaxIterError, SingularMatrixError

log = logging.getLogger(__name__)


class SparseComplexSystem:
    """An n x n complex matrix accumulated from triplets, a right-hand side
    and a set of Dirichlet constraints.

    Contributions are buffered and summed on conversion to CSR; duplicate
    (row, col) pairs add up.
    """

    def __init__(self, n: int):
        self.n = int(n)
        self.rhs = np.zeros(self.n, dtype=complex)
        self.dirichlet: dict = {}
        self._rows: list = []
        self._cols: list = []
        self._vals: list = []
        self._csr = None
        self.solve_info = None

    def add_triplets(self, rows, cols, vals):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=complex).ravel()
        if not (len(rows) == len(cols) == len(vals)):
            raise ValueError("triplet arrays must have equal length")
        if len(rows) == 0:
            return
        lo = min(rows.min(), cols.min())
        hi = max(rows.max(), cols.max())
        if lo < 0 or hi >= self.n:
            raise IndexError(f"index out of range for system of size {self.n}")
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(vals)
        self._csr = None

    @property
    def matrix(self) -> sp.csr_matrix:
        """Assembled matrix without constraints (sorted, duplicate-free CSR)."""
        if self._csr is None:
            if self._rows:
                r = np.concatenate(self._rows)
                c = np.concatenate(self._cols)
                v = np.concatenate(self._vals)
            else:
                r = c = np.zeros(0, dtype=np.int64)
                v = np.zeros(0, dtype=complex)
            A = sp.coo_matrix((v, (r, c)), shape=(self.n, self.n)).tocsr()
            A.sum_duplicates()
            A.sort_indices()
            coo = A.tocoo()
            self._rows, self._cols, self._vals = [coo.row.astype(np.int64)], [coo.col.astype(np.int64)], [coo.data]
            self._csr = A
        return self._csr

    def add_to_diagonal(self, dof: int, value: complex):
        self.add_triplets([dof], [dof], [value])

    def constrain(self, dofs, values):
        dofs = np.atleast_1d(np.asarray(dofs, dtype=np.int64))
        values = np.broadcast_to(np.asarray(values, dtype=complex), dofs.shape)
        for d, v in zip(dofs, values):
            if not 0 <= d < self.n:
                raise IndexError(f"dof {d} out of range")
            self.dirichlet[int(d)] = complex(v)

    def constrained(self):
        """Matrix and right-hand side with constraints applied symmetrically.

        Constrained rows and columns are zeroed, the diagonal set to one and
        the prescribed values moved to the right-hand side, so a complex
        symmetric matrix stays complex symmetric.
        """
        A = self.matrix
        b = self.rhs.copy()
        if not self.dirichlet:
            return A.copy(), b
        dofs = np.fromiter(self.dirichlet.keys(), dtype=np.int64)
        vals = np.fromiter(self.dirichlet.values(), dtype=complex)
        g = np.zeros(self.n, dtype=complex)
        g[dofs] = vals
        b -= A @ g
        keep = np.ones(self.n)
        keep[dofs] = 0.0
        K = sp.diags(keep)
        Ac = (K @ A @ K + sp.diags(1.0 - keep)).tocsr()
        Ac.sum_duplicates()
        Ac.sort_indices()
        b[dofs] = vals
        return Ac, b


def assemble_add(system: SparseComplexSystem, rows, cols, local_matrix):
    """Scatter-add a dense local block into ``system``."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    local = np.asarray(local_matrix, dtype=complex)
    if local.size == 0:
        return
    if local.shape != (len(rows), len(cols)):
        raise ValueError("local matrix shape does not match index arrays")
    R, C = np.meshgrid(rows, cols, indexing="ij")
    system.add_triplets(R, C, local)


def _residual(A, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / nb if nb > 0 else r


def _residual_extended(A: sp.csr_matrix, x, b):
    """b - A x accumulated in extended precision (long double)."""
    data = A.data.astype(np.clongdouble)
    prod = data * np.asarray(x, dtype=np.clongdouble)[A.indices]
    Ax = np.zeros(A.shape[0], dtype=np.clongdouble)
    nz = np.diff(A.indptr) > 0
    Ax[nz] = np.add.reduceat(prod, A.indptr[:-1][nz])
    return np.asarray(b, dtype=np.clongdouble) - Ax


def solve_direct(system: SparseComplexSystem, check: float = 1e-10, refine: int = 0) -> np.ndarray:
    """Sparse LU with a minimum-degree column ordering and threshold pivoting.

    ``refine`` steps of iterative refinement with residuals in extended
    precision can be requested for ill-conditioned small systems.
    """
    A, b = system.constrained()
    if system.n == 0:
        return np.zeros(0, dtype=complex)
    try:
        lu = spla.splu(
            A.tocsc(),
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.1,
            options={"SymmetricMode": False},
        )
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    U = lu.U.diagonal()
    if np.min(np.abs(U)) <= 1e-14 * np.max(np.abs(U)):
        raise SingularMatrixError("near-zero pivot in sparse LU")
    x = lu.solve(b)
    if refine:
        xe = x.astype(np.clongdouble)
        for _ in range(refine):
            r = _residual_extended(A, xe, b)
            xe = xe + lu.solve(r.astype(complex))
        x = xe.astype(complex)
    res = _residual(A, x, b)
    system.solve_info = {"method": "direct", "residual": res}
    if not np.all(np.isfinite(x)) or res > check:
        raise SingularMatrixError(f"direct solve residual {res:.3e} exceeds {check:.1e}")
    return x


@numba.njit(cache=True)
def _ilu0_factor(indptr, indices, data, n):
    a = data.copy()
    diag = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            if indices[p] == i:
                diag[i] = p
                break
    iw = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if diag[i] < 0:
            return a, diag, i
        for p in range(indptr[i], indptr[i + 1]):
            iw[indices[p]] = p
        for p in range(indptr[i], diag[i]):
            k = indices[p]
            piv = a[diag[k]]
            if piv == 0:
                return a, diag, k
            lik = a[p] / piv
            a[p] = lik
            for q in range(diag[k] + 1, indptr[k + 1]):
                w = iw[indices[q]]
                if w >= 0:
                    a[w] -= lik * a[q]
        for p in range(indptr[i], indptr[i + 1]):
            iw[indices[p]] = -1
        if a[diag[i]] == 0:
            return a, diag, i
    return a, diag, -1


@numba.njit(cache=True)
def _ilu0_solve(indptr, indices, a, diag, r):
    n = len(r)
    y = r.copy()
    for i in range(n):
        acc = y[i]
        for p in range(indptr[i], diag[i]):
            acc -= a[p] * y[indices[p]]
        y[i] = acc
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for p in range(diag[i] + 1, indptr[i + 1]):
            acc -= a[p] * y[indices[p]]
        y[i] = acc / a[diag[i]]
    return y


class ILU0:
    """Incomplete LU factorisation with the sparsity pattern of A."""

    def __init__(self, A: sp.csr_matrix):
        A = sp.csr_matrix(A, dtype=complex)
        A.sum_duplicates()
        A.sort_indices()
        self.indptr = A.indptr.astype(np.int64)
        self.indices = A.indices.astype(np.int64)
        self.a, self.diag, bad = _ilu0_factor(self.indptr, self.indices, A.data, A.shape[0])
        if bad >= 0:
            raise BreakdownError(f"zero pivot in ILU(0) at row {bad}")

    def solve(self, r):
        return _ilu0_solve(self.indptr, self.indices, self.a, self.diag, np.asarray(r, dtype=complex))


def _make_preconditioner(A, precond):
    if precond in (None, "none"):
        return lambda r: r
    if precond == "jacobi":
        d = A.diagonal()
        if np.any(d == 0):
            raise BreakdownError("zero diagonal entry in Jacobi preconditioner")
        inv = 1.0 / d
        return lambda r: inv * r
    if precond == "ilu0":
        return ILU0(A).solve
    raise ValueError(f"unknown preconditioner {precond!r}")


@dataclass
class GMRESResult:
    x: np.ndarray
    iterations: int
    residual: float


def gmres(A, b, restart=200, tol=1e-10, precond="ilu0", maxiter=None, x0=None) -> GMRESResult:
    """Right-preconditioned restarted GMRES (modified Gram-Schmidt, Givens).

    Convergence is measured by the true relative residual ||b - Ax|| / ||b||.
    """
    A = sp.csr_matrix(A)
    n = A.shape[0]
    b = np.asarray(b, dtype=complex)
    M = _make_preconditioner(A, precond)
    maxiter = maxiter if maxiter is not None else max(1000, 10 * restart)
    x = np.zeros(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return GMRESResult(np.zeros(n, dtype=complex), 0, 0.0)
    it = 0
    r = b - A @ x
    beta = np.linalg.norm(r)
    if beta / bnorm < tol:
        return GMRESResult(x, 0, beta / bnorm)
    while it < maxiter:
        m = min(restart, maxiter - it)
        V = np.zeros((m + 1, n), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m, dtype=complex)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = beta
        V[0] = r / beta
        j_done = 0
        for j in range(m):
            w = A @ M(V[j])
            if not np.all(np.isfinite(w)):
                raise BreakdownError("non-finite vector in Arnoldi process")
            for i in range(j + 1):
                H[i, j] = np.vdot(V[i], w)
                w -= H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            for i in range(j):
                t = np.conj(cs[i]) * H[i, j] + np.conj(sn[i]) * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            a_, b_ = H[j, j], H[j + 1, j]
            den = np.sqrt(abs(a_) ** 2 + abs(b_) ** 2)
            if den == 0:
                # invariant Krylov subspace without convergence: A is singular on it
                rel = abs(g[j]) / bnorm
                raise MaxIterError(f"GMRES stagnated at relative residual {rel:.3e} "
                                   "(Krylov subspace exhausted)", it, rel)
            cs[j] = a_ / den
            sn[j] = b_ / den
            H[j, j] = np.conj(cs[j]) * a_ + np.conj(sn[j]) * b_
            H[j + 1, j] = 0
            g[j + 1] = -sn[j] * g[j]
            g[j] = np.conj(cs[j]) * g[j]
            it += 1
            j_done = j + 1
            happy = abs(b_) <= 1e-14 * abs(H[0, 0])
            if abs(g[j + 1]) / bnorm < tol or happy:
                break
            V[j + 1] = w / b_
        y = np.linalg.solve(np.triu(H[:j_done, :j_done]), g[:j_done])
        x_new = x + M(V[:j_done].T @ y)
        r = b - A @ x_new
        beta_new = np.linalg.norm(r)
        rel = beta_new / bnorm
        if rel < tol:
            return GMRESResult(x_new, it, rel)
        if beta_new >= beta * (1 - 1e-12):
            raise MaxIterError(f"GMRES stagnated at relative residual {rel:.3e}", it, rel)
        x, beta = x_new, beta_new
    raise MaxIterError(f"GMRES reached maxiter={maxiter} at relative residual {beta / bnorm:.3e}", it, beta / bnorm)


def solve_gmres(system: SparseComplexSystem, restart: int = 200, tol: float = 1e-10,
                precond: str = "ilu0", maxiter=None) -> np.ndarray:
    A, b = system.constrained()
    res = gmres(A, b, restart=restart, tol=tol, precond=precond, maxiter=maxiter)
    system.solve_info = {"method": "gmres", "iterations": res.iterations, "residual": res.residual}
    log.info("GMRES converged in %d iterations (rel. residual %.2e)", res.iterations, res.residual)
    return res.x
