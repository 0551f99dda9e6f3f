"""Statistical helpers: interval estimates, tail bounds and fits."""

import math

import numpy as np
import pytest

from convfpp import (
    ks_exponential,
    linear_fit,
    poisson_chernoff_bounds,
    two_proportion_z,
    wilson_interval,
)


class TestWilson:
    def test_contains_point_estimate(self):
        iv = wilson_interval(30, 100)
        assert iv.lower < iv.point < iv.upper
        assert iv.point == 0.3

    def test_known_value(self):
        # 50/100 at 95%: center 0.5, half-width z/(2 sqrt(n + z^2))
        iv = wilson_interval(50, 100)
        z = 1.959963984540054
        half = z / (2.0 * math.sqrt(100 + z * z))
        assert iv.lower == pytest.approx(0.5 - half, abs=1e-12)
        assert iv.upper == pytest.approx(0.5 + half, abs=1e-12)

    def test_extreme_counts_stay_in_unit_interval(self):
        assert wilson_interval(0, 50).lower >= 0.0
        assert wilson_interval(50, 50).upper <= 1.0
        assert wilson_interval(0, 50).upper > 0.0
        assert wilson_interval(50, 50).lower < 1.0

    def test_narrows_with_sample_size(self):
        small = wilson_interval(30, 100)
        big = wilson_interval(300, 1000)
        assert big.upper - big.lower < small.upper - small.lower

    def test_separation(self):
        lo = wilson_interval(5, 100)
        hi = wilson_interval(60, 100)
        assert lo.separated_below(hi)
        assert not hi.separated_below(lo)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            wilson_interval(5, 0)
        with pytest.raises(ValueError):
            wilson_interval(11, 10)
        with pytest.raises(ValueError):
            wilson_interval(5, 10, confidence=1.0)


class TestPoissonBounds:
    def test_closed_form_values(self):
        b = poisson_chernoff_bounds(100.0, epsilon=0.1)
        assert b.lower_tail == pytest.approx(math.exp(-0.5))
        assert b.upper_tail == pytest.approx(math.exp(-0.25))

    def test_bounds_loosen_as_epsilon_vanishes(self):
        tight = poisson_chernoff_bounds(50.0, epsilon=0.5)
        loose = poisson_chernoff_bounds(50.0, epsilon=0.01)
        assert tight.lower_tail < loose.lower_tail < 1.0
        assert loose.lower_tail == pytest.approx(1.0, abs=1e-2)

    def test_large_deviation_bound_is_valid(self):
        b = poisson_chernoff_bounds(10.0, C=3.0)
        # exact optimum is exp(-mu (C log C - C + 1))
        exact = math.exp(-10.0 * (3.0 * math.log(3.0) - 2.0))
        assert b.large_dev >= exact - 1e-12
        assert b.large_dev < 1.0

    def test_bounds_dominate_empirical_tails(self):
        mu, eps = 30.0, 0.3
        b = poisson_chernoff_bounds(mu, epsilon=eps)
        rng = np.random.default_rng(0)
        x = rng.poisson(mu, 200000)
        assert np.mean(x <= mu * (1 - eps)) <= b.lower_tail
        assert np.mean(x >= mu * (1 + eps)) <= b.upper_tail

    def test_input_validation(self):
        with pytest.raises(ValueError):
            poisson_chernoff_bounds(-1.0, epsilon=0.1)
        with pytest.raises(ValueError):
            poisson_chernoff_bounds(10.0, epsilon=1.5)
        with pytest.raises(ValueError):
            poisson_chernoff_bounds(10.0, C=-2.0)


class TestKolmogorovSmirnov:
    def test_accepts_matching_rate(self):
        rng = np.random.default_rng(1)
        x = rng.exponential(1.0 / 2.0, 20000)
        stat, p = ks_exponential(x, 2.0)
        assert p > 0.01

    def test_rejects_wrong_rate(self):
        rng = np.random.default_rng(1)
        x = rng.exponential(1.0, 20000)
        stat, p = ks_exponential(x, 2.0)
        assert p < 1e-6

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            ks_exponential(np.ones(10), 0.0)


class TestTwoProportions:
    def test_identical_samples(self):
        z, p = two_proportion_z(50, 100, 50, 100)
        assert z == 0.0
        assert p == 1.0

    def test_clear_difference(self):
        z, p = two_proportion_z(90, 100, 10, 100)
        assert abs(z) > 5
        assert p < 1e-6

    def test_degenerate_pool(self):
        z, p = two_proportion_z(0, 100, 0, 100)
        assert p == 1.0


class TestLinearFit:
    def test_recovers_exact_line(self):
        x = np.arange(10.0)
        slope, intercept, r = linear_fit(x, 3.0 * x - 1.0)
        assert slope == pytest.approx(3.0)
        assert intercept == pytest.approx(-1.0)
        assert abs(r) == pytest.approx(1.0)

    def test_sign_of_correlation(self):
        x = np.arange(50.0)
        rng = np.random.default_rng(2)
        _, _, r = linear_fit(x, -2.0 * x + rng.normal(0, 1, 50))
        assert r < -0.99
