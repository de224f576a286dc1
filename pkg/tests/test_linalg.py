import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import polynomial as npoly
from oracles import projector_identity_residual

from spkoopman import linalg


def random_matrix(seed, shape):
    return np.random.default_rng(seed).standard_normal(shape)


class TestSvd:
    def test_identity(self):
        U, S, V = linalg.svd(np.eye(3))
        np.testing.assert_allclose(S, np.ones(3))
        np.testing.assert_allclose(np.abs(U @ V.T), np.eye(3), atol=1e-14)

    def test_diagonal(self):
        _, S, _ = linalg.svd(np.diag([3.0, 2.0, 1.0]))
        np.testing.assert_allclose(S, [3, 2, 1])

    @pytest.mark.parametrize("shape", [(5, 4), (4, 5), (7, 7), (1, 3)])
    def test_round_trip_and_orthonormality(self, shape, rng):
        M = rng.standard_normal(shape)
        U, S, V = linalg.svd(M)
        assert np.linalg.norm(M - U @ np.diag(S) @ V.T) <= 1e-10 * np.linalg.norm(M)
        np.testing.assert_allclose(U.T @ U, np.eye(S.size), atol=1e-10)
        np.testing.assert_allclose(V.T @ V, np.eye(S.size), atol=1e-10)
        assert np.all(np.diff(S) <= 0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            linalg.svd(np.array([[1.0, np.nan]]))


class TestTruncateRank:
    def test_noise_floor(self):
        U, V = np.eye(3), np.eye(3)
        _, S, _ = linalg.truncate_rank(U, np.array([3.0, 2.0, 1e-14]), V, tol=1e-12)
        assert S.size == 2

    def test_ties_keep_first_column(self):
        U = np.array([[1.0, 0.0], [0.0, 1.0]])
        Ur, Sr, Vr = linalg.truncate_rank(U, np.array([1.0, 1.0]), U, rank=1)
        np.testing.assert_array_equal(Ur[:, 0], [1.0, 0.0])

    def test_constructed_rank(self, rng):
        M = rng.standard_normal((6, 3)) @ rng.standard_normal((3, 6))
        _, S, _ = linalg.truncate_rank(*linalg.svd(M), tol=1e-10)
        assert S.size == 3

    def test_rank_too_large(self):
        with pytest.raises(ValueError):
            linalg.truncate_rank(np.eye(2), np.ones(2), np.eye(2), rank=3)

    def test_needs_exactly_one_criterion(self):
        with pytest.raises(ValueError):
            linalg.truncate_rank(np.eye(2), np.ones(2), np.eye(2))
        with pytest.raises(ValueError):
            linalg.truncate_rank(np.eye(2), np.ones(2), np.eye(2), rank=1, tol=0.1)


class TestEigGeneral:
    def test_rotation(self):
        lam, vec = linalg.eig_general(np.array([[0.0, -1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(lam, [1j, -1j], atol=1e-15)
        assert lam[0] == np.conj(lam[1])
        np.testing.assert_array_equal(vec[:, 0], np.conj(vec[:, 1]))

    def test_diagonal_spectrum(self):
        lam, _ = linalg.eig_general(np.diag([-1.0, -0.05, -0.1]))
        np.testing.assert_allclose(lam, [-1.0, -0.1, -0.05])

    @pytest.mark.parametrize("seed", range(5))
    def test_companion_matrix_roots(self, seed):
        c = np.random.default_rng(seed).standard_normal(3)
        # monic x^3 + c2 x^2 + c1 x + c0
        C = np.zeros((3, 3))
        C[1:, :-1] = np.eye(2)
        C[:, -1] = -c
        lam, _ = linalg.eig_general(C)
        roots = npoly.polyroots(np.r_[c, 1.0])
        for r in roots:
            assert np.min(np.abs(lam - r)) <= 1e-8

    @pytest.mark.parametrize("n", [1, 2, 5, 12])
    def test_residuals_and_unit_vectors(self, n, rng):
        M = rng.standard_normal((n, n))
        eig = linalg.eig_general(M)
        tol = 1e-8 * np.linalg.norm(M)
        assert np.all(eig.residuals(M) <= tol)
        np.testing.assert_allclose(np.linalg.norm(eig.eigenvectors, axis=0), 1.0)

    def test_ordering(self, rng):
        lam, _ = linalg.eig_general(rng.standard_normal((9, 9)))
        mag = np.round(np.abs(lam), 12)
        assert np.all(np.diff(mag) <= 0)

    def test_exact_conjugate_pairs(self, rng):
        lam, vec = linalg.eig_general(rng.standard_normal((10, 10)))
        for i in np.flatnonzero(lam.imag > 0):
            j = np.flatnonzero(lam == np.conj(lam[i]))
            assert j.size == 1
            np.testing.assert_array_equal(vec[:, j[0]], np.conj(vec[:, i]))

    def test_rejects_rectangular(self):
        with pytest.raises(ValueError):
            linalg.eig_general(np.ones((2, 3)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31 - 1))
    def test_trace_and_determinant(self, n, seed):
        M = random_matrix(seed, (n, n))
        lam, _ = linalg.eig_general(M)
        assert abs(np.sum(lam) - np.trace(M)) <= 1e-8 * max(1.0, np.linalg.norm(M))
        det = np.linalg.det(M)
        assert abs(np.prod(lam) - det) <= 1e-6 * max(abs(det), 1e-300) + 1e-12


class TestPinvLstsq:
    def test_pinv_singular_diagonal(self):
        np.testing.assert_allclose(linalg.pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_lstsq_identity(self, rng):
        B = rng.standard_normal((4, 2))
        np.testing.assert_allclose(linalg.lstsq(np.eye(4), B), B)

    def test_normal_equations_oracle(self, rng):
        A, B = rng.standard_normal((8, 3)), rng.standard_normal((8, 2))
        np.testing.assert_allclose(
            linalg.lstsq(A, B), np.linalg.solve(A.T @ A, A.T @ B), rtol=1e-8, atol=1e-12
        )

    def test_cutoff_rule(self):
        assert linalg.pinv_cutoff((5, 3)) == 5 * np.finfo(float).eps
        P = linalg.pinv(np.diag([1.0, 1e-17]))
        np.testing.assert_allclose(P, np.diag([1.0, 0.0]))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31 - 1))
    def test_moore_penrose_identities(self, m, n, seed):
        M = random_matrix(seed, (m, n))
        P = linalg.pinv(M)
        scale = np.linalg.norm(M)
        assert np.linalg.norm(M @ P @ M - M) <= 1e-8 * scale
        assert np.linalg.norm(P @ M @ P - P) <= 1e-8 * np.linalg.norm(P)
        assert np.linalg.norm((M @ P).T - M @ P) <= 1e-8 * np.linalg.norm(M @ P)


class TestProjectorIdentity:
    @pytest.mark.parametrize("seed", range(100))
    def test_identity(self, seed):
        assert projector_identity_residual(seed) <= 1e-8
