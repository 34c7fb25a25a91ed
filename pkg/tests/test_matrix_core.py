import numpy as np
import pytest

from resolvent_kit.errors import InputError, OverlapNotSPDError
from resolvent_kit.matrix_core import (
    GeneralMatrix,
    SymMatrix,
    delete_row_col,
    det,
    eig_general,
    gen_sym_eig,
    sym_eig,
)

from conftest import char_poly_3x3, cubic_roots, det_cofactor, random_spd, random_symmetric


class TestTypes:
    def test_sym_matrix_rejects_asymmetry(self):
        with pytest.raises(InputError):
            SymMatrix(np.array([[1.0, 2.0], [2.0 + 1e-13, 1.0]]))

    def test_sym_matrix_frozen(self):
        m = SymMatrix(np.eye(3))
        with pytest.raises(ValueError):
            m.data[0, 0] = 5.0

    def test_general_matrix_shape(self):
        g = GeneralMatrix(np.ones((2, 5)))
        assert (g.rows, g.cols) == (2, 5)

    def test_spectral_pair_scale_invariance(self, rng):
        h = random_symmetric(rng, 5)
        om = random_spd(rng, 5)
        pair = gen_sym_eig(h, om)
        factors = rng.uniform(0.5, 2.0, size=5)
        scaled = pair.rescaled(factors)
        # eps unchanged, sigma and eta pick up the square
        np.testing.assert_allclose(scaled.eps, pair.eps)
        np.testing.assert_allclose(scaled.eta / scaled.sigma, pair.eps, atol=1e-12)
        gs = scaled.gamma
        np.testing.assert_allclose(
            np.diag(gs.T @ om @ gs), scaled.sigma, rtol=1e-10, atol=1e-12
        )


class TestSymEig:
    def test_diagonal(self):
        pair = sym_eig(np.diag([2.0, 3.0]))
        np.testing.assert_allclose(pair.eps, [2.0, 3.0])
        np.testing.assert_allclose(pair.gamma, np.eye(2))
        np.testing.assert_allclose(pair.sigma, [1.0, 1.0])
        np.testing.assert_allclose(pair.eta, [2.0, 3.0])

    def test_off_diagonal_pair(self):
        pair = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(pair.eps, [-1.0, 1.0])
        s = 1.0 / np.sqrt(2.0)
        # sign convention: first nonzero component positive
        np.testing.assert_allclose(pair.gamma[:, 0], [s, -s])
        np.testing.assert_allclose(pair.gamma[:, 1], [s, s])

    def test_cubic_oracle(self, rng):
        for _ in range(10):
            h = random_symmetric(rng, 3)
            pair = sym_eig(h)
            roots = cubic_roots(*char_poly_3x3(h))
            np.testing.assert_allclose(pair.eps, roots, atol=1e-10)

    def test_orthonormal_columns(self, rng):
        h = random_symmetric(rng, 7)
        pair = sym_eig(h)
        np.testing.assert_allclose(pair.gamma.T @ pair.gamma, np.eye(7), atol=1e-12)

    def test_sign_convention_deterministic(self, rng):
        h = random_symmetric(rng, 6)
        g1 = sym_eig(h).gamma
        g2 = sym_eig(h.copy()).gamma
        assert np.array_equal(g1, g2)
        for j in range(6):
            col = g1[:, j]
            nz = np.nonzero(np.abs(col) > 1e-12 * np.abs(col).max())[0]
            assert col[nz[0]] > 0


class TestGenSymEig:
    def test_identity_overlap_matches_sym_eig(self, rng):
        h = random_symmetric(rng, 5)
        a = sym_eig(h)
        b = gen_sym_eig(h, np.eye(5))
        np.testing.assert_allclose(a.eps, b.eps, atol=1e-12)
        np.testing.assert_allclose(a.gamma, b.gamma, atol=1e-10)

    def test_diagonal_pencil(self):
        pair = gen_sym_eig(np.diag([2.0, 6.0]), np.diag([1.0, 2.0]))
        np.testing.assert_allclose(pair.eps, [2.0, 3.0])

    def test_determinant_root_oracle(self, rng):
        h = random_symmetric(rng, 4)
        om = random_spd(rng, 4)
        pair = gen_sym_eig(h, om)
        for eps in pair.eps:
            val = det_cofactor(h - eps * om)
            scale = abs(det_cofactor(om)) * max(1.0, np.max(np.abs(pair.eps))) ** 4
            assert abs(val) / scale < 1e-8

    def test_simultaneous_diagonalization(self, rng):
        h = random_symmetric(rng, 6)
        om = random_spd(rng, 6)
        pair = gen_sym_eig(h, om)
        ht = pair.gamma.T @ h @ pair.gamma
        ot = pair.gamma.T @ om @ pair.gamma
        tol = 1e-10 * max(np.abs(h).max(), 1.0)
        assert np.max(np.abs(ht - np.diag(np.diag(ht)))) < tol
        assert np.max(np.abs(ot - np.diag(np.diag(ot)))) < tol
        np.testing.assert_allclose(np.diag(ot), pair.sigma, atol=1e-10)
        np.testing.assert_allclose(np.diag(ht), pair.eta, atol=1e-9)
        np.testing.assert_allclose(pair.eta / pair.sigma, pair.eps, atol=1e-10)

    def test_not_spd_rejected(self, rng):
        h = random_symmetric(rng, 4)
        with pytest.raises(OverlapNotSPDError, match="overlap not SPD"):
            gen_sym_eig(h, np.diag([1.0, -1.0, 1.0, 1.0]))


class TestDeleteRowCol:
    def test_index_bookkeeping(self):
        a = np.arange(9.0).reshape(3, 3)  # a[i, j] = 3 i + j
        out = delete_row_col(a, 0, 1)
        np.testing.assert_array_equal(out, [[3.0, 5.0], [6.0, 8.0]])

    def test_identity_center(self):
        out = delete_row_col(np.eye(3), 1, 1)
        np.testing.assert_array_equal(out, np.eye(2))

    def test_identity_off_center(self):
        # hand enumeration: rows (1, 2) and columns (0, 2) of the identity
        out = delete_row_col(np.eye(3), 0, 1)
        np.testing.assert_array_equal(out, [[0.0, 0.0], [0.0, 1.0]])

    def test_entry_map_property(self, rng):
        a = rng.randn(5, 5)
        n, m = 2, 3
        out = delete_row_col(a, n, m)
        for i in range(4):
            for j in range(4):
                assert out[i, j] == a[i + (i >= n), j + (j >= m)]

    def test_too_small(self):
        with pytest.raises(InputError, match="empty submatrix"):
            delete_row_col(np.array([[1.0]]), 0, 0)

    def test_wraps_domain_types(self):
        out = delete_row_col(GeneralMatrix(np.eye(3)), 0, 0)
        assert isinstance(out, GeneralMatrix)
        assert out.rows == out.cols == 2


class TestDet:
    def test_identity(self):
        assert det(np.eye(6)) == pytest.approx(1.0)

    def test_upper_triangular(self, rng):
        a = np.triu(rng.randn(5, 5))
        np.testing.assert_allclose(det(a), np.prod(np.diag(a)), rtol=1e-12)

    def test_cofactor_oracle(self, rng):
        for _ in range(5):
            a = rng.randn(4, 4)
            want = det_cofactor(a)
            np.testing.assert_allclose(det(a), want, rtol=1e-10)

    def test_singular_is_zero(self):
        a = np.ones((3, 3))
        assert abs(det(a)) < 1e-12


class TestEigGeneral:
    def test_diagonal(self):
        vals = eig_general(np.diag([1.0, 2.0]))
        np.testing.assert_allclose(vals, [1.0, 2.0])

    def test_nilpotent(self):
        vals = eig_general(np.array([[0.0, 1.0], [0.0, 0.0]]))
        np.testing.assert_allclose(vals, [0.0, 0.0], atol=1e-12)

    def test_product_matches_det(self, rng):
        for _ in range(5):
            a = rng.randn(3, 3)
            prod = np.prod(eig_general(a))
            np.testing.assert_allclose(prod.real, det(a), rtol=1e-8, atol=1e-10)
            assert abs(prod.imag) < 1e-8

    def test_sorted_output(self, rng):
        vals = eig_general(rng.randn(6, 6))
        keys = [(v.real, v.imag) for v in vals]
        assert keys == sorted(keys)


class TestInterlacing:
    def test_cauchy_interlacing(self, rng):
        h = random_symmetric(rng, 7)
        eps = np.linalg.eigvalsh(h)
        for n in range(7):
            sub = np.linalg.eigvalsh(delete_row_col(h, n, n))
            assert np.all(eps[:-1] <= sub + 1e-12)
            assert np.all(sub <= eps[1:] + 1e-12)


class TestCofactorInverseIdentity:
    def test_inverse_from_deleted_determinants(self, rng):
        c = rng.randn(5, 5) + 5.0 * np.eye(5)
        inv = np.linalg.inv(c)
        dc = det(c)
        for n in range(5):
            for m in range(5):
                val = det(delete_row_col(c, n, m)) * (-1.0) ** (n + m) / dc
                np.testing.assert_allclose(val, inv[m, n], rtol=1e-9, atol=1e-12)
