import math

import numpy as np
import pytest

from glome.bounds import (
    TheoryConfig,
    complexity_bound,
    dim_gating_space,
    kappa0,
    penalty_lower_bound,
    simplex_covering_bound,
)
from glome.divergence import c_rho
from glome.exceptions import OutOfRange


def simplex_grid(K: int, step: float) -> np.ndarray:
    """All grid points of the (K-1)-simplex with coordinates on a step lattice."""
    m = round(1.0 / step)
    if K == 2:
        a = np.arange(m + 1)
        pts = np.column_stack([a, m - a])
    elif K == 3:
        pts = np.array([(i, j, m - i - j) for i in range(m + 1)
                        for j in range(m + 1 - i)])
    else:
        raise NotImplementedError
    return pts / m


def greedy_covering_count(points: np.ndarray, delta: float) -> int:
    """Oracle: greedy sup-norm delta-covering of the simplex.

    Each step takes the first uncovered grid point and considers centers
    shifted by delta along simplex-preserving directions (plus the point
    itself), keeping whichever in-simplex candidate covers the most
    still-uncovered points.
    """
    K = points.shape[1]
    shifts = [np.zeros(K)]
    for i in range(K):
        for j in range(K):
            if i != j:
                u = np.zeros(K)
                u[i], u[j] = delta, -delta
                shifts.append(u)
    uncovered = np.ones(points.shape[0], dtype=bool)
    count = 0
    while uncovered.any():
        p = points[np.argmax(uncovered)]
        best_mask, best_covered = None, -1
        for u in shifts:
            center = p + u
            if center.min() < 0 or center.max() > 1:
                continue
            mask = np.max(np.abs(points - center), axis=1) <= delta
            covered = int(np.count_nonzero(mask & uncovered))
            if covered > best_covered:
                best_mask, best_covered = mask, covered
        uncovered &= ~best_mask
        count += 1
    return count


class TestDimGatingSpace:
    @pytest.mark.parametrize("K,L,expected", [(1, 1, 2), (2, 1, 5), (3, 2, 17)])
    def test_cases(self, K, L, expected):
        assert dim_gating_space(K, L) == expected


class TestSimplexCoveringBound:
    def test_K2_delta1(self):
        assert simplex_covering_bound(2, 1.0) == pytest.approx(
            2.0 * (2 * math.pi * math.e), rel=1e-12
        )

    def test_K1_delta_half(self):
        assert simplex_covering_bound(1, 0.5) == pytest.approx(
            math.sqrt(2 * math.pi * math.e), rel=1e-12
        )

    def test_greedy_covering_within_bound_small_case(self):
        pts = simplex_grid(2, step=1e-3)
        count = greedy_covering_count(pts, 0.25)
        assert count <= 3
        assert count <= simplex_covering_bound(2, 0.25)
        assert simplex_covering_bound(2, 0.25) == pytest.approx(136.6, rel=1e-3)

    @pytest.mark.parametrize("K", [2, 3])
    @pytest.mark.parametrize("delta", [0.1, 0.25, 0.5])
    def test_greedy_covering_never_exceeds_bound(self, K, delta):
        pts = simplex_grid(K, step=delta * 1e-2)
        assert greedy_covering_count(pts, delta) <= simplex_covering_bound(K, delta)

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(OutOfRange):
            simplex_covering_bound(2, 0.0)


class TestComplexityBound:
    def test_vanishing_log_term(self):
        # dim=1, C=0: base constant is pi, and for n <= 3 the log term is negative.
        assert complexity_bound(1, 0.0, 3) == pytest.approx(2 * math.pi, rel=1e-14)

    def test_direct_substitution(self):
        dim, C, n = 5, 1.0, 10**6
        base = (math.sqrt(1.0) + math.sqrt(math.pi)) ** 2
        expected = dim * (2 * base + math.log(n / (base * dim)))
        assert complexity_bound(dim, C, n) == pytest.approx(expected, rel=1e-14)

    def test_monotone_nondecreasing_in_n(self):
        values = [complexity_bound(7, 0.5, n) for n in (1, 10, 100, 10**4, 10**8)]
        assert all(v2 >= v1 for v1, v2 in zip(values, values[1:]))

    def test_lower_bound_property(self, rng):
        for _ in range(25):
            dim = int(rng.integers(1, 50))
            C = float(rng.uniform(0, 10))
            n = int(rng.integers(1, 10**7))
            base = (math.sqrt(C) + math.sqrt(math.pi)) ** 2
            assert complexity_bound(dim, C, n) >= 2 * dim * base - 1e-12


class TestPenaltyLowerBound:
    def test_zero_offset_is_composition(self):
        assert penalty_lower_bound(11, 2000, 1.0, 0.0, 1.0) == pytest.approx(
            complexity_bound(11, 1.0, 2000), rel=1e-14
        )

    def test_linear_in_kappa(self):
        one = penalty_lower_bound(11, 2000, 1.0, 3.0, 1.0)
        two = penalty_lower_bound(11, 2000, 1.0, 3.0, 2.0)
        assert two == pytest.approx(2.0 * one, rel=1e-14)

    def test_direct_substitution(self):
        expected = 1.0 * (complexity_bound(11, 1.0, 2000) + 0.0)
        assert penalty_lower_bound(11, 2000, 1.0, 0.0, 1.0) == pytest.approx(
            expected, rel=1e-14
        )

    def test_homogeneous_degree_one(self, rng):
        for _ in range(10):
            kappa = float(rng.uniform(0.1, 10))
            scale = float(rng.uniform(0.1, 10))
            a = penalty_lower_bound(7, 500, 2.0, 1.0, kappa * scale)
            b = penalty_lower_bound(7, 500, 2.0, 1.0, kappa)
            assert a == pytest.approx(scale * b, rel=1e-12)


def kappa0_oracle(rho, C1, eps_d, inner_kappa):
    """Independent step-by-step recomputation of the constant."""
    eps_pen = 1 - 1 / C1
    crho = (1 / rho) * min((1 - rho) / rho, 1) * (math.log(1 + rho / (1 - rho)) - rho)
    k0 = 2 * (2 + eps_d) / (1 + eps_d)
    k1 = (1 / math.sqrt(rho * (1 - rho))) * (
        3 * inner_kappa * math.sqrt(2) + 12 + 16 * math.sqrt((1 - rho) / rho)
    )
    k2 = (1 / math.sqrt(rho * (1 - rho))) * (42 + 3 / (4 * math.sqrt(k0)))
    s = (k1 + k2) ** 2
    return (k0 * s * (math.sqrt(1 + 72 * crho * eps_pen / (rho * k0 * s)) + 1)
            / (2 * crho * eps_pen) + 18 / rho)


class TestKappa0:
    def test_eps_d_limit(self):
        cfg = TheoryConfig(rho=0.5, C1=2.0, eps_d=1e6, frak_C=1.0)
        k0p = 2 * (2 + cfg.eps_d) / (1 + cfg.eps_d)
        assert abs(k0p - 2.0) < 1e-5
        assert kappa0(cfg) == pytest.approx(kappa0_oracle(0.5, 2.0, 1e6, 27.0), rel=1e-12)

    def test_reference_case_matches_oracle(self):
        cfg = TheoryConfig(rho=0.5, C1=2.0, eps_d=1.0, frak_C=1.0, inner_kappa=27.0)
        value = kappa0(cfg)
        assert value > 0 and math.isfinite(value)
        assert value == pytest.approx(kappa0_oracle(0.5, 2.0, 1.0, 27.0), rel=1e-12)

    def test_decreasing_in_C1(self):
        values = [kappa0(TheoryConfig(rho=0.5, C1=c1, eps_d=1.0, frak_C=1.0))
                  for c1 in (1.1, 1.5, 2.0, 5.0, 50.0)]
        assert all(v2 < v1 for v1, v2 in zip(values, values[1:]))

    def test_config_validation(self):
        with pytest.raises(OutOfRange):
            TheoryConfig(rho=1.5, C1=2.0, eps_d=1.0, frak_C=1.0)
        with pytest.raises(OutOfRange):
            TheoryConfig(rho=0.5, C1=1.0, eps_d=1.0, frak_C=1.0)
        with pytest.raises(OutOfRange):
            TheoryConfig(rho=0.5, C1=2.0, eps_d=0.0, frak_C=1.0)


class TestPositivityEverywhere:
    def test_all_bounds_finite_positive(self, rng):
        for _ in range(20):
            K = int(rng.integers(1, 6))
            L = int(rng.integers(1, 4))
            assert dim_gating_space(K, L) > 0
            assert simplex_covering_bound(K, float(rng.uniform(0.05, 1.0))) > 0
            cb = complexity_bound(int(rng.integers(1, 100)), float(rng.uniform(0, 5)),
                                  int(rng.integers(1, 10**6)))
            assert cb > 0 and math.isfinite(cb)

    def test_crho_consistency_with_divergence_module(self):
        # bounds.kappa0 consumes the same constant exposed in divergence.
        assert c_rho(0.5) == pytest.approx(2 * (math.log(2) - 0.5), rel=1e-12)
