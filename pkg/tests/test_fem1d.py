import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glri_abc import abc_theory as T
from glri_abc import fem1d as F
from glri_abc.specialfuncs import pade_exp_neg, pade_zeros

G1 = 0.5 + math.sqrt(3) / 2 * 1j


class TestMatrices:
    def test_linear_midpoint(self):
        M, K = F.local_mass_stiffness(1, 1.0, F.REDUCED)
        assert np.allclose(M, 0.25 * np.ones((2, 2)), atol=1e-16)
        assert np.allclose(K, [[1, -1], [-1, 1]], atol=1e-15)

    @pytest.mark.parametrize("N", range(1, 7))
    def test_stiffness_rule_independent(self, N):
        _, Kr = F.reference_matrices(N, F.REDUCED)
        _, Kf = F.reference_matrices(N, F.FULL)
        assert np.allclose(Kr, Kf, rtol=1e-14, atol=1e-14)

    @pytest.mark.parametrize("N", range(1, 7))
    @pytest.mark.parametrize("mode", [F.REDUCED, F.FULL])
    def test_reference_invariants(self, N, mode):
        M, K = F.reference_matrices(N, mode)
        assert np.allclose(M, M.T) and np.allclose(K, K.T)
        assert M.sum() == pytest.approx(2.0, rel=1e-15)
        assert np.allclose(K.sum(axis=1), 0.0, atol=1e-13)

    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_reduced_mass_is_lumped_differently(self, N):
        Mr, _ = F.reference_matrices(N, F.REDUCED)
        Mf, _ = F.reference_matrices(N, F.FULL)
        assert not np.allclose(Mr, Mf)

    def test_two_cell_dense_mirror(self):
        N, gamma = 3, 1.3 - 0.4j
        mesh = F.Mesh1D.two_cell(G1)
        A = F.assemble_1d(mesh, gamma, N).matrix.toarray()
        dense = np.zeros((2 * N + 1, 2 * N + 1), dtype=complex)
        for c in range(2):
            M, K = F.local_mass_stiffness(N, 1.0, F.REDUCED)
            g = mesh.stretch[c]
            dense[c * N:(c + 1) * N + 1, c * N:(c + 1) * N + 1] += gamma**2 / g * M + g * K
        assert np.allclose(A, dense, rtol=1e-15)
        assert np.allclose(A, A.T)


class TestMesh:
    @pytest.mark.parametrize("args", [([0, 1], [1, 1], [F.REDUCED]), ([0, 1], [2.0], [F.REDUCED]),
                                      ([1, 0], [1.0], [F.REDUCED]), ([0, 1], [1.0], ["exact"])])
    def test_validation(self, args):
        with pytest.raises(ValueError):
            F.Mesh1D(*args)

    def test_layered(self):
        spec = T.LayerSpec(2, (0.5, 0.25), (1 + 1j, 2.0), h0=1.0)
        mesh = F.Mesh1D.layered(spec, n_physical=2)
        assert np.allclose(mesh.vertices, [-2, -1, 0, 0.5, 0.75])
        assert list(mesh.stretch) == [1, 1, 1 + 1j, 2]
        assert F.n_dofs(mesh, 2) == 9
        x = F.node_coordinates(mesh, 2)
        assert np.all(np.diff(x) > 0)


class TestBoundary:
    def test_dirichlet_rows(self):
        s = F.assemble_1d(F.Mesh1D.two_cell(1.0), 1.0, 2)
        F.apply_bcs_1d(s, 1.0, F.DIRICHLET_ZERO)
        A, b = s.constrained()
        assert b[0] == 1 and b[-1] == 0
        assert A[0, 0] == 1 and A.getrow(0).nnz == 1

    def test_sommerfeld_adds_gamma(self):
        mesh, g = F.Mesh1D.two_cell(G1), 2 - 1j
        s = F.assemble_1d(mesh, g, 2)
        before = s.matrix[-1, -1]
        F.apply_bcs_1d(s, 1.0, F.TRANSFORMED_SOMMERFELD, g)
        assert s.matrix[-1, -1] - before == g

    def test_sommerfeld_needs_gamma(self):
        s = F.assemble_1d(F.Mesh1D.two_cell(1.0), 1.0, 1)
        with pytest.raises(ValueError):
            F.apply_bcs_1d(s, 1.0, F.TRANSFORMED_SOMMERFELD)


class TestExtraction:
    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    def test_pure_outgoing_wave(self, N):
        g = 1.5 + 2j
        mesh = F.Mesh1D.two_cell(1.0)
        vals = np.zeros(2 * N + 1, dtype=complex)
        vals[0], vals[N] = 1.0, pade_exp_neg(N, g)
        sol = F.Solution1D(vals, mesh, N)
        assert abs(F.extract_reflection(sol, 0, g)) < 1e-15

    def test_linear_zero(self):
        assert abs(F.reflection_at(1, 1.0, 2.0)) < 1e-10

    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    @pytest.mark.parametrize("gamma_1", [1.0, G1])
    def test_grid_against_formula(self, N, gamma_1):
        for p in F.reflection_map(N, gamma_1, F.Grid(nx=5, ny=5)):
            want = T.reflection_abc(p.gamma, T.LayerSpec(N, (1.0,), (gamma_1,)))
            if (p.gamma / gamma_1).real > 0:
                assert abs(p.reflection - want) < 1e-9
            else:
                # layer amplifies; only relative agreement is meaningful
                assert abs(p.reflection - want) < 1e-11 * abs(want)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 3), st.floats(0.2, 6), st.floats(-6, 6))
    def test_matrix_extraction_agrees(self, N, L, re, im):
        g = complex(re, im)
        spec = T.LayerSpec.uniform(N, L, 1 + 0.5j, h=0.7)
        if (g * 0.7 / (1 + 0.5j)).real <= 0.05:
            return
        sol = F.solve_1d(F.Mesh1D.layered(spec), g, N)
        a = F.extract_reflection(sol, 0, g)
        b = F.extract_reflection_matrix(sol, 0, g)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))

    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    def test_transfer_eigenvalues(self, N):
        g = 0.8 + 1.7j
        mesh = F.Mesh1D.two_cell(1.0)
        _, lam, _ = F.cell_transfer(mesh, 0, g, N)
        p = pade_exp_neg(N, g)
        assert lam[1] == pytest.approx(p, rel=1e-12)
        assert lam[0] == pytest.approx(1 / p, rel=1e-12)
        if N == 1:
            assert lam[1] == pytest.approx((1 - g / 2) / (1 + g / 2), rel=1e-14)

    def test_reference_cell_check(self):
        mesh = F.Mesh1D.two_cell(G1)
        sol = F.solve_1d(mesh, 1.0, 2)
        with pytest.raises(ValueError):
            F.extract_reflection(sol, 1, 1.0)


class TestInteriorModes:
    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_two_parameter_structure(self, N):
        g = 1.2 + 0.9j
        spec = T.LayerSpec.uniform(N, 2, G1)
        sol = F.solve_1d(F.Mesh1D.layered(spec), g, N)
        for cell in range(3):
            c = F.jacobi_coefficients(sol, cell, g)
            scale = np.max(np.abs(c))
            for n in range(N - 1):
                assert abs(c[n + 2] - c[n]) < 1e-10 * scale


class TestImpedance:
    @pytest.mark.parametrize("N,L", [(1, 1), (2, 2), (3, 1), (4, 3)])
    def test_matches_formula(self, N, L):
        g = 1.1 + 1.4j
        spec = T.LayerSpec.uniform(N, L, G1, h=0.8)
        sol = F.solve_1d(F.Mesh1D.layered(spec), g, N)
        assert F.weak_flux_impedance(sol, 1, g) == pytest.approx(T.sommerfeld_impedance_abc(g, spec), rel=1e-9)

    def test_transformed_sommerfeld_recovers_gamma(self):
        g = 2 - 0.5j
        spec = T.LayerSpec.uniform(3, 2, G1)
        sol = F.solve_1d(F.Mesh1D.layered(spec), g, 3, right=F.TRANSFORMED_SOMMERFELD)
        assert F.weak_flux_impedance(sol, 1, g) == pytest.approx(g, rel=1e-10)


def pmdl_reference(gamma, gamma_1, L, left=1.0):
    """Linear elements, midpoint rule, written out densely."""
    n = L + 2
    A = np.zeros((n, n), dtype=complex)
    stretches = [1.0] + [gamma_1] * L
    for c, g in enumerate(stretches):
        loc = (gamma**2 / g) * 0.25 * np.ones((2, 2)) + g * np.array([[1, -1], [-1, 1]])
        A[c:c + 2, c:c + 2] += loc
    b = -A[:, 0] * left
    A[0, :], A[:, 0] = 0, 0
    A[0, 0], b[0] = 1, left
    A[-1, :], A[:, -1] = 0, 0
    A[-1, -1], b[-1] = 1, 0
    return np.linalg.solve(A, b)


@pytest.mark.parametrize("L", [1, 2, 4])
def test_pmdl_equivalence(L):
    g, g1 = 1.3 + 2.1j, 0.9 + 0.2j
    spec = T.LayerSpec.uniform(1, L, g1)
    sol = F.solve_1d(F.Mesh1D.layered(spec), g, 1)
    assert np.allclose(sol.values, pmdl_reference(g, g1, L), rtol=1e-12, atol=1e-14)


class TestSweep:
    def test_grid_is_cell_centred(self):
        pts = F.Grid(nx=2, ny=2).points()
        assert pts == [2 - 4j, 6 - 4j, 2 + 4j, 6 + 4j]

    def test_pole_flag(self):
        z = pade_zeros(2)[0]
        assert F.near_pade_pole(2, -z)
        assert not F.near_pade_pole(2, z)

    def test_csv(self, tmp_path):
        rows = F.reflection_map(1, 1.0, F.Grid(nx=2, ny=1))
        out = tmp_path / "m.csv"
        F.write_reflection_csv(rows, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "re_gamma,im_gamma,abs_reflection"
        assert len(lines) == 3
        re, im, r = map(float, lines[1].split(","))
        assert (re, im) == (2.0, 0.0) and r == pytest.approx(abs(rows[0].reflection), rel=1e-9)
