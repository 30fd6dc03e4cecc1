import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specshatter.errors import NotPSD, TooManySubsets
from specshatter.submatrix import (
    best_principal_submatrix,
    best_rectangular_submatrix,
    pivoted_cholesky_indices,
    principal_bound,
)


def _wishart(seed, n=6, dof=6):
    G = np.random.default_rng(seed).standard_normal((n, dof))
    return G @ G.T


def _brute_principal(X, k):
    best, arg = -np.inf, None
    for S in itertools.combinations(range(X.shape[0]), k):
        v = np.linalg.eigvalsh(X[np.ix_(S, S)])[0]
        if v > best:
            best, arg = v, S
    return best, arg


class TestPrincipal:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_matches_brute_force(self, k):
        for seed in range(20):
            X = _wishart(seed)
            res = best_principal_submatrix(X, k)
            best, _ = _brute_principal(X, k)
            assert res.value == pytest.approx(best, rel=1e-12)
            assert res.subsets_checked == math.comb(6, k)
            assert res.interlacing_violations == 0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 100_000), st.integers(1, 3), st.integers(1, 8))
    def test_bound_holds(self, seed, k, dof):
        X = _wishart(seed, 6, dof)
        res = best_principal_submatrix(X, k)
        assert res.value >= res.bound - 1e-10

    def test_bound_formula(self):
        X = np.diag([4.0, 2.0, 1.0])
        # trace 7, top-2 sum 6, lambda_2 = 2, k (n - k + 1) = 4
        assert principal_bound(X, 2) == pytest.approx(7 / 6 * 2 / 4)

    def test_greedy_is_feasible(self):
        X = _wishart(3)
        ex = best_principal_submatrix(X, 2)
        gr = best_principal_submatrix(X, 2, mode="greedy")
        assert len(gr.S) == 2
        assert gr.value <= ex.value + 1e-12
        assert gr.value == pytest.approx(np.linalg.eigvalsh(X[np.ix_(gr.S, gr.S)])[0])

    def test_pivoted_cholesky_picks_largest_diagonal_first(self):
        X = np.diag([1.0, 5.0, 3.0])
        assert pivoted_cholesky_indices(X, 2)[0] == 1

    def test_rejects_indefinite(self):
        with pytest.raises(NotPSD):
            best_principal_submatrix(np.diag([1.0, -1.0]), 1)

    def test_rounding_noise_is_tolerated(self):
        G = np.random.default_rng(0).standard_normal((6, 2)) * 1e4
        X = G @ G.T
        best_principal_submatrix(X, 2)

    def test_too_many_subsets(self):
        with pytest.raises(TooManySubsets):
            best_principal_submatrix(np.eye(40), 20)


class TestRectangular:
    def test_matches_brute_force(self):
        R = np.random.default_rng(5).standard_normal((7, 2))
        res = best_rectangular_submatrix(R)
        best = max(np.linalg.svd(R[list(S)], compute_uv=False)[-1] for S in itertools.combinations(range(7), 2))
        assert res.value == pytest.approx(best, rel=1e-12)
        assert res.value >= res.bound

    def test_greedy_satisfies_bound(self):
        for seed in range(30):
            R = np.random.default_rng(seed).standard_normal((8, 3))
            gr = best_rectangular_submatrix(R, mode="greedy")
            assert gr.value <= best_rectangular_submatrix(R).value + 1e-12
            assert len(gr.S) == 3

    def test_shape_check(self):
        with pytest.raises(ValueError):
            best_rectangular_submatrix(np.ones((2, 3)))
