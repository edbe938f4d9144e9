import numpy as np
import pytest
import scipy.sparse as sp

from glri_abc.errors import BreakdownError, MaxIterError, SingularMatrixError
from glri_abc.linalg_sparse import (
    ILU0, SparseComplexSystem, assemble_add, gmres, solve_direct, solve_gmres,
)


def helmholtz_like(n, shift=-0.5 + 0.3j, seed=0):
    rng = np.random.default_rng(seed)
    A = sp.diags([-1, 2.0, -1], [-1, 0, 1], shape=(n, n), dtype=complex) * n + shift * sp.eye(n)
    R = sp.random(n, n, density=3 / n, random_state=rng) * 0.1
    return (A + R + R.T).tocsr().astype(complex)


def as_system(A, b):
    s = SparseComplexSystem(A.shape[0])
    coo = A.tocoo()
    s.add_triplets(coo.row, coo.col, coo.data)
    s.rhs[:] = b
    return s


class TestAssembly:
    def test_identity_twice(self):
        s = SparseComplexSystem(3)
        assemble_add(s, [0, 1, 2], [0, 1, 2], np.eye(3))
        assemble_add(s, [0, 1, 2], [0, 1, 2], np.eye(3))
        assert np.allclose(s.matrix.toarray(), 2 * np.eye(3))

    def test_empty_add(self):
        s = SparseComplexSystem(2)
        assemble_add(s, [], [], np.zeros((0, 0)))
        assert s.matrix.nnz == 0

    def test_dense_mirror(self):
        rng = np.random.default_rng(3)
        s = SparseComplexSystem(6)
        dense = np.zeros((6, 6), dtype=complex)
        for _ in range(10):
            idx = rng.choice(6, 3, replace=False)
            blk = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
            assemble_add(s, idx, idx, blk)
            dense[np.ix_(idx, idx)] += blk
        A = s.matrix
        assert np.allclose(A.toarray(), dense)
        for i in range(6):
            cols = A.indices[A.indptr[i]:A.indptr[i + 1]]
            assert np.all(np.diff(cols) > 0)

    def test_out_of_range(self):
        s = SparseComplexSystem(2)
        with pytest.raises(IndexError):
            assemble_add(s, [0, 2], [0, 1], np.eye(2))
        with pytest.raises(IndexError):
            s.constrain([5], [1.0])

    def test_constraints_symmetric(self):
        A = helmholtz_like(12)
        s = as_system(A, np.ones(12))
        s.constrain([0, 5], [2.0, 1j])
        Ac, b = s.constrained()
        assert abs(Ac - Ac.T).max() < 1e-14
        for d, v in [(0, 2.0), (5, 1j)]:
            row = Ac.getrow(d).toarray().ravel()
            assert row[d] == 1 and np.count_nonzero(row) == 1 and b[d] == v


class TestDirect:
    def test_identity(self):
        s = as_system(sp.eye(4, format="csr"), np.arange(4.0))
        assert np.allclose(solve_direct(s), np.arange(4.0))

    def test_poisson_hand_solution(self):
        # -u'' = 0 on 5 nodes, u0 = 0, u4 = 4: linear profile
        A = sp.diags([-1, 2.0, -1], [-1, 0, 1], shape=(5, 5)).tocsr()
        s = as_system(A, np.zeros(5))
        s.constrain([0, 4], [0.0, 4.0])
        assert np.allclose(solve_direct(s), [0, 1, 2, 3, 4])

    def test_random_complex_residual(self):
        rng = np.random.default_rng(1)
        M = rng.normal(size=(50, 50)) + 1j * rng.normal(size=(50, 50))
        A = sp.csr_matrix(M @ M.conj().T + 5 * np.eye(50) + 2j * np.eye(50))
        b = rng.normal(size=50) + 0j
        s = as_system(A, b)
        x = solve_direct(s)
        assert np.linalg.norm(A @ x - b) / np.linalg.norm(b) < 1e-10
        assert s.solve_info["residual"] < 1e-10

    def test_singular(self):
        A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(SingularMatrixError):
            solve_direct(as_system(A, np.ones(2)))


class TestGMRES:
    def test_identity_one_iteration(self):
        s = as_system(sp.eye(5, format="csr"), np.arange(1.0, 6.0))
        x = solve_gmres(s, precond="none")
        assert np.allclose(x, np.arange(1.0, 6.0)) and s.solve_info["iterations"] == 1

    @pytest.mark.parametrize("precond", ["none", "jacobi", "ilu0"])
    def test_agrees_with_direct(self, precond):
        A = helmholtz_like(80)
        b = np.exp(1j * np.arange(80.0))
        x_d = solve_direct(as_system(A, b))
        res = gmres(A, b, restart=30, tol=1e-12, precond=precond)
        assert np.allclose(res.x, x_d, atol=1e-8)
        assert res.residual < 1e-12

    def test_complex_restart_converges(self):
        A = helmholtz_like(200, shift=-3.0 + 1.0j, seed=4)
        b = np.ones(200, dtype=complex)
        res = gmres(A, b, restart=5, tol=1e-10, precond="jacobi", maxiter=5000)
        assert res.residual < 1e-10

    def test_singular_raises(self):
        A = sp.csr_matrix(np.diag([1.0, 1.0, 0.0]))
        with pytest.raises(MaxIterError):
            gmres(A, np.ones(3), tol=1e-12, precond="none")

    def test_unknown_preconditioner(self):
        with pytest.raises(ValueError):
            gmres(sp.eye(2, format="csr"), np.ones(2), precond="amg")

    def test_jacobi_zero_diagonal(self):
        with pytest.raises(BreakdownError):
            gmres(sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]])), np.ones(2), precond="jacobi")


def test_ilu0_exact_on_tridiagonal():
    # ILU(0) of a tridiagonal matrix is its exact LU
    A = helmholtz_like(30, seed=9)
    A = sp.diags([A.diagonal(-1), A.diagonal(), A.diagonal(1)], [-1, 0, 1]).tocsr()
    b = np.arange(30.0) + 1j
    assert np.allclose(A @ ILU0(A).solve(b), b)
