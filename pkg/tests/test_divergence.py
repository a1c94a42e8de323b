import math

import numpy as np
import pytest

from glome.divergence import (
    CondDensity,
    c_rho,
    kl_gaussian_closed_form,
    tensorized_hellinger_mc,
    tensorized_jkl_mc,
    tensorized_kl_mc,
)
from glome.exceptions import OutOfRange, SamplerMissing
from glome.model import GaussianParams
from glome.simulate import ws_scenario


def gaussian_cond(mean: float, var: float) -> CondDensity:
    """A 1-D Gaussian conditional density that ignores its covariate."""
    sd = math.sqrt(var)

    def log_density(ys, x):
        return (-0.5 * (ys[:, 0] - mean) ** 2 / var
                - 0.5 * math.log(2 * math.pi * var))

    def sampler(x, m, rng):
        return (mean + sd * rng.standard_normal(m))[:, None]

    return CondDensity(log_density_fn=log_density, sampler_fn=sampler)


def hellinger_sq_gaussian_1d(m1, v1, m2, v2):
    """Oracle: closed-form squared Hellinger distance of two 1-D Gaussians."""
    s1, s2 = math.sqrt(v1), math.sqrt(v2)
    bc = math.sqrt(2 * s1 * s2 / (v1 + v2)) * math.exp(-0.25 * (m1 - m2) ** 2 / (v1 + v2))
    return 1.0 - bc


class TestCRho:
    def test_half(self):
        assert c_rho(0.5) == pytest.approx(2 * (math.log(2) - 0.5), rel=1e-12)
        assert c_rho(0.5) == pytest.approx(0.386294, abs=1e-6)

    def test_quarter(self):
        assert c_rho(0.25) == pytest.approx(4 * (math.log(4 / 3) - 0.25), rel=1e-12)
        assert c_rho(0.25) == pytest.approx(0.150728, abs=1e-6)

    def test_vanishes_at_zero(self):
        # Series oracle: log(1+u) - rho ~ rho^2/2, so c_rho(rho) ~ rho/2.
        rho = 1e-6
        value = c_rho(rho)
        assert value < 1e-5
        assert value == pytest.approx(rho / 2, rel=1e-4)

    def test_out_of_range(self):
        for rho in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(OutOfRange):
                c_rho(rho)


class TestKlClosedForm:
    def test_identical_is_zero(self, rng):
        from conftest import random_spd

        p = GaussianParams(mean=rng.standard_normal(3), cov=random_spd(rng, 3))
        assert kl_gaussian_closed_form(p, p) == pytest.approx(0.0, abs=1e-12)

    def test_unit_mean_shift(self):
        p = GaussianParams(mean=[0.0], cov=[[1.0]])
        q = GaussianParams(mean=[1.0], cov=[[1.0]])
        assert kl_gaussian_closed_form(p, q) == pytest.approx(0.5, rel=1e-14)

    def test_variance_ratio(self):
        p = GaussianParams(mean=[0.0], cov=[[1.0]])
        q = GaussianParams(mean=[0.0], cov=[[4.0]])
        expected = 0.5 * (0.25 - 1 + math.log(4.0))
        assert kl_gaussian_closed_form(p, q) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.318147, abs=1e-6)


class TestTensorizedKl:
    def test_same_density_is_exactly_zero(self, rng):
        s0 = gaussian_cond(0.3, 0.8)
        xs = rng.standard_normal((20, 1))
        est = tensorized_kl_mc(s0, s0, xs, n_y=50, seed=1)
        assert est.value == 0.0
        assert est.std_error == 0.0

    def test_matches_closed_form_within_3se(self, rng):
        s0 = gaussian_cond(0.0, 1.0)
        s1 = gaussian_cond(0.7, 1.6)
        truth = kl_gaussian_closed_form(
            GaussianParams(mean=[0.0], cov=[[1.0]]),
            GaussianParams(mean=[0.7], cov=[[1.6]]),
        )
        xs = rng.standard_normal((100, 1))
        est = tensorized_kl_mc(s0, s1, xs, n_y=200, seed=7)
        assert abs(est.value - truth) <= 3 * est.std_error
        assert est.n_x == 100 and est.n_y == 200

    def test_deterministic_given_seed(self, rng):
        s0 = gaussian_cond(0.0, 1.0)
        s1 = gaussian_cond(0.5, 2.0)
        xs = rng.standard_normal((10, 1))
        a = tensorized_kl_mc(s0, s1, xs, n_y=40, seed=42)
        b = tensorized_kl_mc(s0, s1, xs, n_y=40, seed=42)
        assert a == b
        c = tensorized_kl_mc(s0, s1, xs, n_y=40, seed=43)
        assert c.value != a.value

    def test_std_error_shrinks_with_n_y(self, rng):
        s0 = gaussian_cond(0.0, 1.0)
        s1 = gaussian_cond(0.4, 1.0)
        xs = rng.standard_normal((50, 1))
        se1 = tensorized_kl_mc(s0, s1, xs, n_y=100, seed=3).std_error
        se4 = tensorized_kl_mc(s0, s1, xs, n_y=400, seed=3).std_error
        # 1/sqrt(m) scaling: quadrupling the draws should halve the error.
        assert se4 == pytest.approx(se1 / 2, rel=0.25)

    def test_sampler_required(self, rng):
        s0 = CondDensity(log_density_fn=lambda ys, x: np.zeros(ys.shape[0]))
        with pytest.raises(SamplerMissing):
            tensorized_kl_mc(s0, s0, rng.standard_normal((5, 1)), n_y=10, seed=0)


class TestTensorizedJkl:
    def test_same_density_is_zero(self, rng):
        s0 = gaussian_cond(0.0, 1.0)
        xs = rng.standard_normal((10, 1))
        est = tensorized_jkl_mc(s0, s0, 0.5, xs, n_y=20, seed=0)
        assert est.value == pytest.approx(0.0, abs=1e-15)

    def test_bounded_by_rho_constant(self, rng):
        # Even for wildly separated densities the JKL stays below its cap.
        s0 = gaussian_cond(0.0, 0.5)
        s1 = gaussian_cond(30.0, 0.5)
        xs = rng.standard_normal((40, 1))
        for rho in (0.25, 0.5, 0.75):
            est = tensorized_jkl_mc(s0, s1, rho, xs, n_y=100, seed=5)
            cap = (1 / rho) * math.log(1 / (1 - rho))
            # At full separation the estimate sits exactly on the cap and the
            # standard error collapses; allow ulp-scale roundoff.
            assert est.value <= cap + 3 * est.std_error + 1e-12

    def test_jkl_below_kl(self, rng):
        s0 = gaussian_cond(0.0, 1.0)
        s1 = gaussian_cond(1.0, 2.0)
        xs = rng.standard_normal((60, 1))
        kl = tensorized_kl_mc(s0, s1, xs, n_y=150, seed=9)
        jkl = tensorized_jkl_mc(s0, s1, 0.5, xs, n_y=150, seed=9)
        combined = math.hypot(kl.std_error, jkl.std_error)
        assert jkl.value <= kl.value + 3 * combined

    def test_rho_out_of_range(self, rng):
        s0 = gaussian_cond(0.0, 1.0)
        with pytest.raises(OutOfRange):
            tensorized_jkl_mc(s0, s0, 1.0, rng.standard_normal((5, 1)), 10, 0)


class TestTensorizedHellinger:
    def test_identical_densities_within_noise(self, rng):
        s0 = gaussian_cond(0.2, 1.0)
        est = tensorized_hellinger_mc(s0, s0, rng.standard_normal((20, 1)),
                                      n_y=100, seed=2)
        assert est.value == pytest.approx(0.0, abs=1e-12)

    def test_matches_gaussian_closed_form(self, rng):
        m1, v1, m2, v2 = 0.0, 1.0, 0.9, 1.8
        s0 = gaussian_cond(m1, v1)
        s1 = gaussian_cond(m2, v2)
        xs = rng.standard_normal((150, 1))
        est = tensorized_hellinger_mc(s0, s1, xs, n_y=300, seed=11)
        truth = hellinger_sq_gaussian_1d(m1, v1, m2, v2)
        assert abs(est.value - truth) <= 4 * est.std_error

    def test_chain_ordering_on_random_pairs(self, rng):
        rho = 0.5
        crho = c_rho(rho)
        for trial in range(10):
            m1, m2 = rng.normal(size=2)
            v1, v2 = rng.uniform(0.3, 2.0, size=2)
            s0, s1 = gaussian_cond(m1, v1), gaussian_cond(m2, v2)
            xs = rng.standard_normal((50, 1))
            hel = tensorized_hellinger_mc(s0, s1, xs, n_y=200, seed=trial)
            jkl = tensorized_jkl_mc(s0, s1, rho, xs, n_y=200, seed=trial)
            kl = tensorized_kl_mc(s0, s1, xs, n_y=200, seed=trial)
            se_hj = math.hypot(crho * hel.std_error, jkl.std_error)
            se_jk = math.hypot(jkl.std_error, kl.std_error)
            assert crho * hel.value <= jkl.value + 3 * se_hj
            assert jkl.value <= kl.value + 3 * se_jk


class TestCondDensityFromForward:
    def test_matches_model_logpdf(self, rng):
        from glome.model import forward_conditional_logpdf

        params = ws_scenario().forward_params()
        cond = CondDensity.from_forward_params(params)
        x = np.array([0.4])
        ys = rng.standard_normal((8, 1))
        got = cond.logpdf(ys, x)
        for i in range(8):
            assert got[i] == pytest.approx(
                forward_conditional_logpdf(ys[i], x, params), rel=1e-12
            )

    def test_sampler_mean_matches_mixture(self):
        params = ws_scenario().forward_params()
        cond = CondDensity.from_forward_params(params)
        x = np.array([0.2])
        rng = np.random.default_rng(99)
        ys = cond.sample(x, 40_000, rng)
        # Oracle: mixture mean with the gate weights at x.
        from glome.model import gating_probs, swap_roles

        w = gating_probs(x, swap_roles(params))
        mean = w[0] * (-5 * 0.2 + 2) + w[1] * (0.1 * 0.2)
        assert ys.mean() == pytest.approx(mean, abs=0.02)
