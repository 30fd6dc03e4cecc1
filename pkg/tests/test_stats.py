import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specshatter.errors import InsufficientTrials, TooFewPoints
from specshatter.mc.engine import chunk_bounds, concat_chunks, map_chunks
from specshatter.mc.stats import dkw_band, ecdf_counts, fit_loglog_slope, mean_and_stderr


class TestDKW:
    def test_formula(self):
        assert dkw_band(1000, 0.01) == pytest.approx(math.sqrt(math.log(200) / 2000))

    def test_coverage(self):
        # the band must cover the uniform CDF in at least 1 - alpha of repetitions
        rng = np.random.default_rng(0)
        N, reps = 500, 400
        band = dkw_band(N, 0.05)
        grid = np.linspace(0, 1, 201)
        misses = 0
        for _ in range(reps):
            F = ecdf_counts(rng.uniform(size=N), grid) / N
            misses += np.max(np.abs(F - grid)) > band
        assert misses / reps <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / reps)

    def test_needs_trials(self):
        with pytest.raises(InsufficientTrials):
            dkw_band(0)


class TestECDF:
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=50), st.lists(st.floats(-10, 10), min_size=1, max_size=10))
    def test_matches_naive_count(self, xs, grid):
        counts = ecdf_counts(xs, grid)
        assert list(counts) == [sum(x <= g for x in xs) for g in grid]


class TestMean:
    def test_values(self):
        mean, se = mean_and_stderr([1.0, 2.0, 3.0, 4.0])
        assert mean == 2.5
        assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)

    def test_needs_two(self):
        with pytest.raises(InsufficientTrials):
            mean_and_stderr([1.0])


class TestSlope:
    def test_exact_power_law(self):
        eps = np.geomspace(1e-3, 1e-1, 8)
        fit = fit_loglog_slope(eps, 0.3 * eps**2.5)
        assert fit.slope == pytest.approx(2.5, abs=1e-12)
        assert fit.intercept == pytest.approx(math.log(0.3), abs=1e-10)
        assert fit.stderr == pytest.approx(0.0, abs=1e-10)

    def test_min_count_filter(self):
        eps = np.geomspace(1e-3, 1e-1, 6)
        p = eps
        counts = np.array([1, 10, 60, 100, 500, 1000])
        fit = fit_loglog_slope(eps, p, counts)
        assert fit.used == (2, 3, 4, 5)
        assert fit.points == 4

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            fit_loglog_slope([1e-2, 1e-1], [1e-4, 1e-2])

    def test_recovers_exponent_from_samples(self):
        # U^(1/a) has P[x <= e] = e^a
        rng = np.random.default_rng(1)
        x = rng.uniform(size=200_000) ** (1 / 2.0)
        eps = np.geomspace(0.03, 0.3, 8)
        counts = ecdf_counts(x, eps)
        fit = fit_loglog_slope(eps, counts / x.size, counts)
        assert abs(fit.slope - 2.0) <= 4 * fit.stderr + 0.02


class TestEngine:
    def test_chunk_bounds(self):
        assert chunk_bounds(10, 4) == [(0, 4), (4, 4), (8, 2)]
        assert chunk_bounds(0, 4) == []

    @pytest.mark.parametrize("threads", [1, 3, 8])
    def test_thread_count_does_not_change_results(self, threads):
        def work(start, count):
            return np.arange(start, start + count) ** 2

        ref = concat_chunks(work, 1000, 1, chunk=64)
        np.testing.assert_array_equal(concat_chunks(work, 1000, threads, chunk=64), ref)

    def test_tuple_results(self):
        a, b = concat_chunks(lambda s, c: (np.arange(s, s + c), -np.arange(s, s + c)), 10, 2, chunk=3)
        np.testing.assert_array_equal(a, np.arange(10))
        np.testing.assert_array_equal(b, -np.arange(10))

    def test_order_preserved(self):
        assert map_chunks(lambda s, c: s, 20, 4, chunk=5) == [0, 5, 10, 15]
