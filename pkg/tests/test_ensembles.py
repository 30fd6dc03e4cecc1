import math

import numpy as np
import pytest
from scipy import stats

from specshatter.ensembles import (
    DENSITY_BOUNDS,
    FAMILIES,
    EnsembleSpec,
    draw_entries,
    estimate_norm_moment,
    moment_from_norms,
    sample_batch,
    sample_matrix,
    trial_rng,
)
from specshatter.errors import ConfigError, InsufficientTrials, UnknownFamily

# scipy laws of the unscaled entries; real and imaginary parts for the complex family
SCIPY_LAWS = {
    "real_ginibre": stats.norm(),
    "complex_ginibre": stats.norm(scale=1 / math.sqrt(2)),
    "uniform": stats.uniform(-math.sqrt(3), 2 * math.sqrt(3)),
    "laplace": stats.laplace(scale=1 / math.sqrt(2)),
    "triangular": stats.triang(0.5, loc=-math.sqrt(6), scale=2 * math.sqrt(6)),
    "shifted_uniform": stats.uniform(1 - math.sqrt(3), 2 * math.sqrt(3)),
}


class TestRng:
    def test_same_key_same_stream(self):
        a = trial_rng(7, 3).standard_normal(5)
        b = trial_rng(7, 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_keys_and_streams_differ(self):
        base = trial_rng(7, 3).standard_normal(5)
        assert not np.array_equal(base, trial_rng(7, 4).standard_normal(5))
        assert not np.array_equal(base, trial_rng(8, 3).standard_normal(5))
        assert not np.array_equal(base, trial_rng(7, 3, stream=1).standard_normal(5))


class TestFamilies:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_density_bound_matches_scipy_peak(self, family):
        law = SCIPY_LAWS[family]
        xs = np.linspace(law.ppf(1e-6), law.ppf(1 - 1e-6), 200_001)
        peak = float(law.pdf(xs).max())
        if family == "complex_ginibre":
            # density of one part of the unit-variance complex entry
            assert DENSITY_BOUNDS[family] == pytest.approx(peak, rel=1e-6)
        else:
            assert DENSITY_BOUNDS[family] == pytest.approx(peak, rel=1e-4)

    @pytest.mark.parametrize("family", FAMILIES)
    def test_entries_follow_law(self, family):
        x = draw_entries(trial_rng(1, 0), family, 20_000)
        law = SCIPY_LAWS[family]
        parts = [x.real, x.imag] if family == "complex_ginibre" else [x]
        for part in parts:
            assert stats.kstest(part, law.cdf).pvalue > 1e-4

    @pytest.mark.parametrize("family", FAMILIES)
    def test_unit_variance(self, family):
        x = draw_entries(trial_rng(2, 0), family, 200_000)
        assert np.mean(np.abs(x - x.mean()) ** 2) == pytest.approx(1.0, abs=0.02)

    def test_unknown_family(self):
        with pytest.raises(UnknownFamily):
            EnsembleSpec(n=3, family="cauchy")


class TestEnsembleSpec:
    def test_json_roundtrip(self):
        spec = EnsembleSpec(n=3, family="uniform", gamma=0.25, A=np.eye(3))
        back = EnsembleSpec.from_json(spec.to_json())
        assert back == spec
        np.testing.assert_array_equal(back.A, spec.A)

    def test_wrong_K_rejected(self):
        with pytest.raises(ConfigError):
            EnsembleSpec(n=3, K=1.0)

    def test_shift_from_file(self, tmp_path):
        (tmp_path / "a.txt").write_text("2 2\n1 0\n0 2\n")
        spec = EnsembleSpec.from_json({"n": 2, "A": "a.txt"}, base_dir=tmp_path)
        assert spec.norm_A == pytest.approx(2.0)

    def test_missing_shift_file(self, tmp_path):
        with pytest.raises(ConfigError):
            EnsembleSpec.from_json({"n": 2, "A": "nope.txt"}, base_dir=tmp_path)

    def test_bad_shape(self):
        with pytest.raises(ConfigError):
            EnsembleSpec(n=3, A=np.eye(2))


class TestSampling:
    def test_matrix_is_pure_function_of_index(self):
        spec = EnsembleSpec(n=4, gamma=0.5, A=np.eye(4))
        batch = sample_batch(spec, 9, 10, 3)
        for t in range(3):
            np.testing.assert_array_equal(batch[t], sample_matrix(spec, 9, 10 + t))

    def test_scaling(self):
        spec = EnsembleSpec(n=40)
        entries = np.concatenate([sample_matrix(spec, 0, i).ravel() for i in range(20)])
        assert np.var(entries) == pytest.approx(1 / 40, rel=0.05)

    def test_gamma_zero_returns_shift(self):
        spec = EnsembleSpec(n=2, gamma=0.0, A=np.eye(2))
        np.testing.assert_array_equal(sample_matrix(spec, 0, 0), np.eye(2))

    def test_complex_family_dtype(self):
        assert sample_matrix(EnsembleSpec(n=3, family="complex_ginibre"), 0, 0).dtype == complex


class TestMoments:
    def test_constant_norms(self):
        est = moment_from_norms(np.full(100, 3.0), 4)
        assert est.mean_estimate == pytest.approx(3.0)
        assert est.stderr == pytest.approx(0.0, abs=1e-12)

    def test_against_direct_formula(self):
        x = np.random.default_rng(0).exponential(size=500)
        est = moment_from_norms(x, 3)
        assert est.mean_estimate == pytest.approx(np.mean(x**3) ** (1 / 3), rel=1e-12)

    def test_ginibre_norm_near_two(self):
        est = estimate_norm_moment(EnsembleSpec(n=40), 1, 300, seed=1)
        assert 1.8 < est.mean_estimate < 2.1

    def test_requires_trials(self):
        with pytest.raises(InsufficientTrials):
            estimate_norm_moment(EnsembleSpec(n=4), 2, 10, seed=0)

    def test_requires_centered(self):
        with pytest.raises(ConfigError):
            estimate_norm_moment(EnsembleSpec(n=2, A=np.eye(2)), 2, 200, seed=0)
        with pytest.raises(ConfigError):
            estimate_norm_moment(EnsembleSpec(n=2, gamma=0.5), 2, 200, seed=0)
