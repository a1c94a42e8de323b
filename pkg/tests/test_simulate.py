import math

import numpy as np
import pytest

from glome.em import EmConfig
from glome.model import forward_conditional_logpdf
from glome.simulate import (
    custom_scenario,
    loglog_regression,
    ms_scenario,
    run_selection_trials,
    sample_glome,
    sample_scenario,
    ws_scenario,
)

from conftest import random_forward_params

FAST_EM = EmConfig(n_restarts=1, max_iter=60, min_points_per_class=5)


class TestSampleScenario:
    def test_ws_covariate_moments(self):
        data = sample_scenario(ws_scenario(), 100_000, seed=10)
        # Oracle: mixture moments, mean 0.5 and variance 0.125 + 0.09.
        var = 0.5 * (0.1 + 0.15) + 0.5 * (0.3 ** 2 + 0.3 ** 2)
        tol = 3 * math.sqrt(var) / math.sqrt(100_000)
        assert abs(data.x.mean() - 0.5) < tol

    def test_seed_reproducibility(self):
        a = sample_scenario(ws_scenario(), 500, seed=3)
        b = sample_scenario(ws_scenario(), 500, seed=3)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.y, b.y)
        c = sample_scenario(ws_scenario(), 500, seed=4)
        assert not np.array_equal(a.x, c.x)

    def test_ws_component_residual_variance(self):
        # Within component 1 the response is -5x + 2 plus variance-0.09 noise.
        data, labels = sample_glome(ws_scenario().forward_params(), 40_000,
                                    seed=11, return_labels=True)
        rows = labels == 0
        resid = data.y[rows, 0] - (-5.0 * data.x[rows, 0] + 2.0)
        m = int(rows.sum())
        se = 0.09 * math.sqrt(2.0 / (m - 1))
        assert abs(resid.var() - 0.09) < 4 * se

    def test_ms_quadratic_means(self):
        data, labels = None, None
        sc = ms_scenario()
        rng = np.random.default_rng(5)
        xs = rng.uniform(0, 1, size=(200, 1))
        means = sc.component_means(0, xs)
        np.testing.assert_allclose(means[:, 0], xs[:, 0] ** 2 - 6 * xs[:, 0] + 1,
                                   rtol=1e-12)
        means2 = sc.component_means(1, xs)
        np.testing.assert_allclose(means2[:, 0], -0.4 * xs[:, 0] ** 2, rtol=1e-12)


class TestSampleGlome:
    def test_single_component_frequency(self, rng):
        params = random_forward_params(rng, K=1, D=1, L=1)
        _, labels = sample_glome(params, 200, seed=0, return_labels=True)
        assert np.all(labels == 0)

    def test_component_frequencies(self, rng):
        params = random_forward_params(rng, K=2, D=1, L=1)
        params = type(params)(pi=[0.3, 0.7], c=params.c, Gamma=params.Gamma,
                              A=params.A, b=params.b, Sigma=params.Sigma)
        n = 100_000
        _, labels = sample_glome(params, n, seed=1, return_labels=True)
        freq = float(np.mean(labels == 0))
        assert abs(freq - 0.3) < 3 * math.sqrt(0.3 * 0.7 / n)

    def test_conditional_covariance_of_x(self, rng):
        params = random_forward_params(rng, K=2, D=2, L=1)
        data, labels = sample_glome(params, 60_000, seed=2, return_labels=True)
        for k in range(2):
            xs = data.x[labels == k]
            emp = np.cov(xs.T)
            np.testing.assert_allclose(emp, params.Gamma[k], atol=0.05)


class TestScenarioTruth:
    def test_ws_truth_matches_model_forward_density(self):
        scenario = ws_scenario()
        params = scenario.forward_params()
        truth = scenario.truth()
        data = sample_scenario(scenario, 200, seed=9)
        for i in range(0, 200, 17):
            x, y = data.x[i], data.y[i]
            got = truth.logpdf(y[None, :], x)[0]
            want = forward_conditional_logpdf(y, x, params)
            assert got == pytest.approx(want, abs=1e-12)

    def test_custom_scenario_round_trips_params(self, rng):
        params = random_forward_params(rng, K=3, D=2, L=2)
        scenario = custom_scenario(params)
        back = scenario.forward_params()
        for name in ("pi", "c", "Gamma", "A", "b", "Sigma"):
            np.testing.assert_array_equal(getattr(back, name), getattr(params, name))

    def test_ms_truth_is_a_proper_density(self):
        from scipy.integrate import quad

        truth = ms_scenario().truth()
        for x in (0.1, 0.6):
            total, _ = quad(
                lambda y: math.exp(truth.logpdf(np.array([[y]]), np.array([x]))[0]),
                -np.inf, np.inf,
            )
            assert total == pytest.approx(1.0, abs=1e-8)

    def test_truth_sampler_deterministic(self):
        truth = ws_scenario().truth()
        rng1 = np.random.default_rng(7)
        rng2 = np.random.default_rng(7)
        a = truth.sample(np.array([0.4]), 50, rng1)
        b = truth.sample(np.array([0.4]), 50, rng2)
        np.testing.assert_array_equal(a, b)


class TestRunSelectionTrials:
    def test_single_trial_reproducible(self):
        kwargs = dict(n=350, K_max=3, n_trials=1, em=FAST_EM, methods=("jump", "aic"),
                      seed=5, divergence="all", n_y=20)
        a = run_selection_trials(ws_scenario(), **kwargs)
        b = run_selection_trials(ws_scenario(), **kwargs)
        assert a.chosen_K == b.chosen_K
        assert a.kappa_hat == b.kappa_hat
        assert a.tkl == b.tkl

    def test_histogram_totals_conserved(self):
        rep = run_selection_trials(ws_scenario(), 300, 3, 4, em=FAST_EM,
                                   methods=("jump", "slope"), seed=8)
        for method in rep.methods:
            assert sum(rep.histogram(method).values()) == rep.n_trials

    def test_thread_parity(self):
        kwargs = dict(n=300, K_max=3, n_trials=4, em=FAST_EM, methods=("jump",),
                      seed=2, divergence="selected", n_y=10)
        serial = run_selection_trials(ws_scenario(), threads=1, **kwargs)
        threaded = run_selection_trials(ws_scenario(), threads=4, **kwargs)
        assert serial.chosen_K == threaded.chosen_K
        assert serial.tkl == threaded.tkl
        assert serial.tkl_selected == threaded.tkl_selected

    def test_divergence_all_covers_every_fitted_k(self):
        rep = run_selection_trials(ws_scenario(), 300, 3, 2, em=FAST_EM,
                                   methods=("jump",), seed=3, divergence="all",
                                   n_y=10)
        assert set(rep.tkl) == {1, 2, 3}
        for K in rep.tkl:
            assert len(rep.tkl[K]) == rep.n_trials

    def test_tkl_summary_quartiles(self):
        rep = run_selection_trials(ws_scenario(), 300, 2, 3, em=FAST_EM,
                                   methods=("jump",), seed=4, divergence="all",
                                   n_y=10)
        summary = rep.tkl_summary()
        for K, stats in summary.items():
            assert stats["q1"] <= stats["median"] <= stats["q3"]
            assert stats["count"] == 3


class TestLogLogRegression:
    def test_exact_inverse_law(self):
        ns = np.array([500, 1000, 2000, 4000])
        means = 3.7 / ns
        slope, intercept, se = loglog_regression(ns, means)
        assert slope == pytest.approx(-1.0, abs=1e-12)
        assert intercept == pytest.approx(math.log(3.7), abs=1e-12)
        assert se == pytest.approx(0.0, abs=1e-12)

    def test_power_law_recovery(self):
        ns = np.array([100, 300, 900, 2700])
        means = 5.0 * ns ** -0.61
        slope, _, _ = loglog_regression(ns, means)
        assert slope == pytest.approx(-0.61, abs=1e-12)
