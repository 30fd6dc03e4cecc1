import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specshatter.errors import DegenerateRegion, RankTooHigh, ResolutionTooCoarse
from specshatter.pseudospectrum import (
    complex_eps_area,
    default_strip,
    grid_nodes,
    grid_sigma_min,
    limiting_ratios,
    rank_inclusion_check,
    read_grid_csv,
    real_axis_eps_length,
    real_axis_intervals,
    sigma_min_at,
    sigma_min_many,
)

ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


class TestSigmaMin:
    def test_normal_matrix_is_distance_to_spectrum(self):
        lam = np.array([0.0, 1.0, 2 + 1j])
        M = np.diag(lam)
        zs = np.array([0.3, 1.5 + 0.2j, -1j, 2 + 0.5j])
        expected = np.min(np.abs(zs[:, None] - lam[None, :]), axis=1)
        np.testing.assert_allclose(sigma_min_many(M, zs), expected, atol=1e-14)

    def test_batched_matches_pointwise(self):
        M = np.random.default_rng(0).standard_normal((5, 5))
        zs = np.linspace(-2, 2, 7)[:, None] + 1j * np.linspace(-1, 1, 3)[None, :]
        batched = sigma_min_many(M, zs)
        for idx in np.ndindex(zs.shape):
            assert batched[idx] == pytest.approx(sigma_min_at(M, zs[idx]), rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 1000), st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3))
    def test_one_lipschitz(self, seed, z, w):
        M = np.random.default_rng(seed).standard_normal((4, 4))
        assert abs(sigma_min_at(M, z) - sigma_min_at(M, w)) <= abs(z - w) + 1e-12


class TestGrid:
    def test_nodes_are_lower_left(self):
        xs, ys = grid_nodes((0, 1, -1, 1), (4, 2))
        np.testing.assert_allclose(xs, [0, 0.25, 0.5, 0.75])
        np.testing.assert_allclose(ys, [-1, 0])

    def test_degenerate_region(self):
        with pytest.raises(DegenerateRegion):
            grid_sigma_min(np.eye(2), (0, 0, 0, 1), (4, 4))
        with pytest.raises(DegenerateRegion):
            grid_sigma_min(np.eye(2), (0, 1, 0, 1), (1, 4))

    def test_count_matches_disk_area(self):
        eps = 0.2
        g = grid_sigma_min(np.zeros((1, 1)), (-1, 1, -1, 1), (400, 400))
        cell = (2 / 400) ** 2
        assert g.count(eps) * cell == pytest.approx(math.pi * eps**2, rel=0.02)

    def test_csv_roundtrip(self, tmp_path):
        g = grid_sigma_min(ROTATION, (-2, 2, -2, 2), (6, 5))
        g.to_csv(tmp_path / "g.csv", {"seed": 1})
        back = read_grid_csv(tmp_path / "g.csv")
        np.testing.assert_array_equal(back.sigma_min, g.sigma_min)
        np.testing.assert_array_equal(back.xs, g.xs)
        np.testing.assert_array_equal(back.ys, g.ys)
        np.testing.assert_allclose(np.sort_complex(back.eigenvalues), np.sort_complex(g.eigenvalues))


class TestRealLength:
    def test_normal_intervals(self):
        ivs = real_axis_intervals(np.diag([0.0, 3.0]), 0.1, (-5, 5))
        assert len(ivs) == 2
        np.testing.assert_allclose(np.array(ivs), [[-0.1, 0.1], [2.9, 3.1]], atol=1e-4)

    def test_length_of_normal_matrix_is_exact(self):
        assert real_axis_eps_length(np.diag([0.0, 3.0]), 0.1, (-5, 5)) == pytest.approx(0.4, rel=1e-3)

    def test_nonnormal_length_scales_with_kappa(self):
        M = np.array([[0.0, 1.0], [0.0, 1.0]])
        eps = 1e-5
        assert real_axis_eps_length(M, eps, (-3, 3)) / eps == pytest.approx(4 * math.sqrt(2), rel=1e-3)

    def test_overlapping_intervals_merge(self):
        ivs = real_axis_intervals(np.diag([0.0, 0.1]), 0.1, (-1, 1))
        assert len(ivs) == 1
        assert real_axis_eps_length(np.diag([0.0, 0.1]), 0.1, (-1, 1)) == pytest.approx(0.3, rel=1e-3)


class TestComplexArea:
    def test_rotation_disks(self):
        eps = 0.05
        assert complex_eps_area(ROTATION, eps, resolution=256) == pytest.approx(2 * math.pi * eps**2, rel=0.01)

    def test_explicit_region(self):
        eps = 0.05
        area = complex_eps_area(ROTATION, eps, region=(-0.2, 0.2, 0.7, 1.3), resolution=256)
        assert area == pytest.approx(math.pi * eps**2, rel=0.01)

    def test_real_spectrum_has_no_area(self):
        assert complex_eps_area(np.diag([0.0, 1.0]), 1e-3) == 0.0

    def test_strip_excludes_near_axis(self):
        out = complex_eps_area(ROTATION, 0.05, resolution=128, detail=True)
        assert out.strip == pytest.approx(default_strip(np.array([1j, -1j]), 1e-10))
        assert out.area_with_strip >= out.area

    def test_resolution_too_coarse(self):
        with pytest.raises(ResolutionTooCoarse):
            complex_eps_area(ROTATION, 1e-3, region=(-2, 2, -2, 2), resolution=16)

    def test_subdivision_improves_estimate(self):
        eps = 0.05
        exact = 2 * math.pi * eps**2
        coarse = complex_eps_area(ROTATION, eps, resolution=32, subdivide=False)
        fine = complex_eps_area(ROTATION, eps, resolution=32, subdivide=True)
        assert abs(fine - exact) <= abs(coarse - exact) + 1e-12


class TestLimitingRatios:
    def test_diagonal_real_ratio(self):
        lr = limiting_ratios(np.diag([0.0, 1.0]), (1e-3, 1e-5), resolution=64)
        assert lr.real_target == pytest.approx(4.0)
        assert lr.real_ratios[-1] == pytest.approx(4.0, rel=0.01)
        assert lr.complex_target == 0.0

    def test_rotation_complex_ratio(self):
        lr = limiting_ratios(ROTATION, (1e-3, 1e-4), resolution=256)
        assert lr.complex_ratios[-1] == pytest.approx(2 * math.pi, rel=0.03)
        assert lr.real_ratios[-1] == 0.0

    def test_eps_list_must_decrease(self):
        with pytest.raises(ValueError):
            limiting_ratios(ROTATION, (1e-4, 1e-3))


class TestRankInclusion:
    def test_singular_values_of_kron_have_multiplicity_r(self):
        A = np.random.default_rng(1).standard_normal((3, 3))
        for r in (2, 3):
            s = np.linalg.svd(0.3j * np.eye(3 * r) - np.kron(A, np.eye(r)), compute_uv=False)
            np.testing.assert_allclose(s.reshape(3, r), np.repeat(s[::r, None], r, axis=1), rtol=1e-10)

    @pytest.mark.parametrize("r", [2, 3])
    def test_low_rank_never_raises_sigma_min(self, r):
        rng = np.random.default_rng(r)
        A = rng.standard_normal((3, 3))
        P = rng.standard_normal((3 * r, r - 1)) @ rng.standard_normal((r - 1, 3 * r))
        out = rank_inclusion_check(A, r, P, ((-2, 2, -2, 2), (10, 10)))
        assert out.holds
        assert out.points == 100

    def test_full_rank_perturbation_rejected(self):
        with pytest.raises(RankTooHigh):
            rank_inclusion_check(np.eye(2), 2, np.eye(4), np.array([0j]))

    def test_point_list(self):
        out = rank_inclusion_check(np.eye(2), 2, np.zeros((4, 4)), np.array([0.5, 1j]))
        assert out.holds and out.max_violation == 0.0
