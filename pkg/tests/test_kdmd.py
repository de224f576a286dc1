import warnings

import numpy as np
import pytest

from spkoopman import KernelSpec, fit_kdmd_continuous, fit_kdmd_discrete
from spkoopman.baselines import fit_dmd
from spkoopman.exceptions import RankTruncationWarning
from spkoopman.features import gram
from spkoopman.kdmd import fit_kdmd_from_grams, gram_basis, gram_spectrum

LIN = KernelSpec("linear")


def linear_trajectory(D, x0, M):
    X = [np.asarray(x0, dtype=float)]
    for _ in range(M - 1):
        X.append(D @ X[-1])
    return np.array(X)


def closest(values, targets):
    return np.array([np.min(np.abs(values - t)) for t in targets])


class TestDiscrete:
    def test_linear_kernel_recovers_dmd(self):
        D = np.array([[0.9, -0.2], [0.15, 0.8]])
        X = linear_trajectory(D, [1.0, 0.3], 20)
        m = fit_kdmd_discrete(X, LIN, rank=2)
        np.testing.assert_allclose(np.sort_complex(m.eigenvalues),
                                   np.sort_complex(np.linalg.eigvals(D)), atol=1e-8)

    def test_duality_with_dmd(self, rng):
        X = rng.standard_normal((15, 4))
        m = fit_kdmd_discrete(X, LIN, rank=4)
        d = fit_dmd(X)
        np.testing.assert_allclose(np.sort_complex(m.eigenvalues), np.sort_complex(d.eigenvalues),
                                   atol=1e-8)

    def test_identical_snapshots(self):
        m = fit_kdmd_discrete(np.array([[0.3, 0.1], [0.3, 0.1]]), KernelSpec("gaussian", 1.0), 1)
        np.testing.assert_allclose(m.eigenvalues, [1.0])

    def test_rank_capped_with_warning(self, rng):
        X = rng.standard_normal((10, 2))
        with pytest.warns(RankTruncationWarning):
            m = fit_kdmd_discrete(X, LIN, rank=5)
        assert m.info["rank_used"] == 2 and m.n_modes == 2

    def test_pairs_mode(self, rng):
        D = np.array([[0.7, 0.2], [0.0, 0.5]])
        X = rng.standard_normal((12, 2))
        m = fit_kdmd_discrete(X, LIN, rank=2, Y=X @ D.T)
        np.testing.assert_allclose(np.sort(m.eigenvalues.real), [0.5, 0.7], atol=1e-10)

    def test_training_eigenfunctions(self, rng):
        X = rng.uniform(-1, 1, (20, 2))
        spec = KernelSpec("gaussian", 1.5)
        m = fit_kdmd_discrete(X, spec, rank=6)
        G = gram(spec, X[:-1], X[:-1])
        oracle = G @ m.gram_vectors / m.gram_sqrt @ m.eigenvectors
        np.testing.assert_allclose(m.eigenfunctions(X[:-1]), oracle, atol=1e-12)


class TestContinuous:
    def test_zero_velocity(self, rng):
        X = rng.standard_normal((10, 2))
        m = fit_kdmd_continuous(X, np.zeros_like(X), KernelSpec("gaussian", 1.0), 5)
        np.testing.assert_allclose(m.eigenvalues, 0.0, atol=1e-14)

    def test_linear_scalar_rate(self, rng):
        X = rng.standard_normal((8, 1))
        m = fit_kdmd_continuous(X, -0.4 * X, LIN, 1)
        np.testing.assert_allclose(m.eigenvalues, [-0.4], atol=1e-14)

    def test_fixed_point_spectrum(self, fixed_point_train):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankTruncationWarning)
            m = fit_kdmd_continuous(fixed_point_train.states, fixed_point_train.derivatives,
                                    KernelSpec("gaussian", 2.0), 36)
        assert np.all(closest(m.eigenvalues, [-1.0, -0.05, -0.1]) <= 1e-3)
        assert m.info["rank_used"] <= 36


class TestGramBasis:
    def test_nonnegative_spectrum(self, rng):
        X = rng.standard_normal((40, 3))
        w, _ = gram_spectrum(gram(KernelSpec("gaussian", 0.8), X, X))
        assert w.min() >= -1e-10 * w.max()
        assert np.all(np.diff(w) <= 0)

    def test_excludes_tiny_eigenvalues(self):
        G = np.diag([1.0, 1e-6, 1e-13])
        with pytest.warns(RankTruncationWarning):
            Q, s, info = gram_basis(G, 3)
        assert info["rank_used"] == 2
        np.testing.assert_allclose(s, [1.0, 1e-3])

    def test_zero_gram(self):
        with pytest.raises(ValueError), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit_kdmd_discrete(np.zeros((4, 2)), LIN, 2)

    def test_from_grams_matches_direct_fit(self, rng):
        X = rng.uniform(-1, 1, (15, 2))
        Xd = -X
        spec = KernelSpec("gaussian", 1.0)
        direct = fit_kdmd_continuous(X, Xd, spec, 6)
        from spkoopman.features import gram_dot

        G, Gd = gram(spec, X, X), gram_dot(spec, X, Xd, X)
        reuse = fit_kdmd_from_grams(G, Gd, X, spec, 6, True, spectrum=gram_spectrum(G))
        np.testing.assert_allclose(reuse.eigenvalues, direct.eigenvalues)
