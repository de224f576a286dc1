import csv
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import analytic_fixed_point_model

from spkoopman.prune import (
    default_cutoff,
    prune,
    q_error,
    r_curve,
    reconstruction_error,
    select_top,
    write_prune_csv,
)

TRUE_MU = np.array([-1.0, -0.05, -0.1])


@pytest.fixture(scope="module")
def analytic():
    return analytic_fixed_point_model()


class TestQError:
    def test_exact_model_on_validation(self, analytic, fixed_point_val):
        q = q_error(analytic, fixed_point_val.states, fixed_point_val.dt)
        assert np.all(q <= 1e-6)

    def test_exact_linear_data_is_zero(self, analytic, fixed_point_val):
        q = q_error(analytic, fixed_point_val.states, fixed_point_val.dt)
        assert np.all(q <= 1e-10)

    @pytest.mark.parametrize("delta", [1e-3, 1e-2, 1e-1])
    def test_wrong_rate_closed_form(self, analytic, fixed_point_val, delta):
        m = replace(analytic, eigenvalues=analytic.eigenvalues + delta)
        X, dt = fixed_point_val.states, fixed_point_val.dt
        q = q_error(m, X, dt)
        # oracle: phi(t) = e^{mu t} phi0, prediction e^{(mu + delta) t} phi0
        t = dt * np.arange(X.shape[0])
        phi = analytic.eigenfunctions(X)
        diff = np.abs(np.exp((analytic.eigenvalues + delta) * t[:, None]) * phi[0] - phi)
        oracle = diff.max(axis=0) / np.sqrt(np.mean(np.abs(phi) ** 2, axis=0))
        np.testing.assert_allclose(q, oracle, rtol=1e-8)

    def test_grows_with_perturbation(self, analytic, fixed_point_val):
        X, dt = fixed_point_val.states, fixed_point_val.dt
        qs = [q_error(replace(analytic, eigenvalues=analytic.eigenvalues + d), X, dt)
              for d in (1e-4, 1e-3, 1e-2)]
        assert np.all(np.diff(np.array(qs), axis=0) > 0)

    def test_degenerate_mode_is_infinite(self, analytic, fixed_point_val):
        V = analytic.eigenvectors.copy()
        V[:, 0] = 0
        q = q_error(replace(analytic, eigenvectors=V), fixed_point_val.states, fixed_point_val.dt)
        assert np.isinf(q[0]) and np.all(np.isfinite(q[1:]))

    @settings(max_examples=25, deadline=None)
    @given(st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3), st.integers(0, 35))
    def test_scale_invariance(self, fixed_point_edmd, fixed_point_val, c, i):
        V = fixed_point_edmd.eigenvectors.copy()
        V[:, i] = V[:, i] * c
        X, dt = fixed_point_val.states, fixed_point_val.dt
        q0 = q_error(fixed_point_edmd, X, dt)[i]
        q1 = q_error(replace(fixed_point_edmd, eigenvectors=V), X, dt)[i]
        assert abs(q1 - q0) <= 1e-10 * max(1.0, q0)

    def test_discrete_model_negative_multiplier(self, analytic):
        # lambda = -0.5 per step: integer powers, no branch ambiguity
        from spkoopman import KoopmanModel

        d = analytic.dictionary
        V = np.zeros((d.n_features, 1))
        V[[tuple(a) for a in d.multi_indices].index((1, 0)), 0] = 1.0
        m = KoopmanModel("edmd", False, np.array([-0.5 + 0j]), V.astype(complex),
                         np.array([[1.0, 0.0]], dtype=complex), dt=1.0, dictionary=d)
        X = np.column_stack([0.3 * (-0.5) ** np.arange(10), np.zeros(10)])
        assert q_error(m, X, 1.0)[0] <= 1e-14


class TestRCurve:
    def test_spanning_modes(self, analytic, fixed_point_val):
        R = r_curve(analytic, fixed_point_val.states, [0, 1, 2])
        assert R[-1] <= 1e-8

    def test_empty_convention(self, fixed_point_val):
        assert reconstruction_error(np.zeros((5, 0)), fixed_point_val.states[:5]) == 1.0

    def test_matches_lstsq_oracle(self, fixed_point_edmd, fixed_point_val):
        X = fixed_point_val.states
        order = np.arange(12)
        R = r_curve(fixed_point_edmd, X, order)
        phi = fixed_point_edmd.eigenfunctions(X)
        for L in (1, 3, 6, 12):
            P = phi[:, order[:L]]
            coef = np.linalg.lstsq(P, X.astype(complex), rcond=None)[0]
            oracle = np.linalg.norm(X - P @ coef) / np.linalg.norm(X)
            assert abs(R[L - 1] - oracle) <= 1e-8

    def test_nonincreasing(self, fixed_point_edmd, fixed_point_val):
        R = r_curve(fixed_point_edmd, fixed_point_val.states, np.arange(36))
        assert np.all(np.diff(R) <= 1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_permutation_invariance(self, fixed_point_edmd, fixed_point_val, seed):
        X = fixed_point_val.states
        S = np.random.default_rng(seed).choice(36, 8, replace=False)
        P = fixed_point_edmd.eigenfunctions(X)[:, S]
        a = reconstruction_error(P, X)
        b = reconstruction_error(P[:, ::-1], X)
        # backward-stable least squares: agreement to rounding times cond(P)
        assert abs(a - b) <= 1e-12 + np.finfo(float).eps * np.linalg.cond(P)

    def test_sharp_drop_once_true_modes_included(self, fixed_point_edmd, fixed_point_val):
        rep = prune(fixed_point_edmd, fixed_point_val.states, fixed_point_val.dt)
        mu = fixed_point_edmd.eigenvalues[rep.order]
        last = max(int(np.argmin(np.abs(mu - t))) for t in TRUE_MU)
        assert rep.r_curve[last] <= 1e-3 * rep.r_curve[0]


class TestPrune:
    def test_order_sorted_with_index_ties(self):
        from spkoopman.prune import _order

        q = np.array([0.3, 0.1, 0.3, 0.1])
        np.testing.assert_array_equal(_order(q), [1, 3, 0, 2])

    def test_default_cutoff(self):
        assert default_cutoff([0.0, 0.01, 0.049, 0.2]) == 3
        assert default_cutoff([0.5, 0.6]) == 1

    def test_top_ten_contains_true_modes(self, fixed_point_edmd, fixed_point_val):
        rep = prune(fixed_point_edmd, fixed_point_val.states, fixed_point_val.dt, cutoff=10)
        top = select_top(fixed_point_edmd, rep)
        assert top.n_modes == 10
        for t in TRUE_MU:
            assert np.min(np.abs(top.eigenvalues - t)) <= 1e-3

    def test_select_all_is_identity(self, fixed_point_edmd, fixed_point_val):
        rep = prune(fixed_point_edmd, fixed_point_val.states, fixed_point_val.dt)
        top = select_top(fixed_point_edmd, rep, 36)
        assert set(top.info["parent_indices"]) == set(range(36))

    def test_select_one(self, fixed_point_edmd, fixed_point_val):
        rep = prune(fixed_point_edmd, fixed_point_val.states, fixed_point_val.dt)
        top = select_top(fixed_point_edmd, rep, 1)
        assert top.info["parent_indices"] == [int(rep.order[0])]

    @pytest.mark.parametrize("n", [0, 37])
    def test_bad_cutoff(self, fixed_point_edmd, fixed_point_val, n):
        with pytest.raises(ValueError):
            prune(fixed_point_edmd, fixed_point_val.states, fixed_point_val.dt, cutoff=n)

    def test_csv_export(self, fixed_point_edmd, fixed_point_val, tmp_path):
        rep = prune(fixed_point_edmd, fixed_point_val.states, fixed_point_val.dt)
        path = tmp_path / "q.csv"
        write_prune_csv(rep, path)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["L_hat", "Q", "R", "mode_index"]
        assert len(rows) == 37
        assert float(rows[1][1]) == rep.q_errors[rep.order[0]]
