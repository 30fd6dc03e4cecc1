import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specshatter.errors import DefectiveOrClustered, NonFinite
from specshatter.spectral import (
    batch_gap_stats,
    eigen_decompose,
    gap_certificate_check,
    gap_stats,
    gap_stats_from_eigenvalues,
    kappa_V_upper,
    singular_values,
)


def _first_order_kappa(M, i, h=1e-7):
    """Eigenvalue motion under the worst rank-one perturbation ``w v^* / (|w||v|)``."""
    lam, V = np.linalg.eig(M)
    W = np.linalg.inv(V)
    v, w = V[:, i], W[i, :].conj()
    E = np.outer(w, v.conj()) / (np.linalg.norm(w) * np.linalg.norm(v))
    moved = np.linalg.eigvals(M + h * E)
    return np.min(np.abs(moved - lam[i])) / h


class TestEigenDecompose:
    def test_two_by_two_oracle(self):
        S = eigen_decompose(np.array([[0.0, 1.0], [0.0, 1.0]]))
        order = np.argsort(S.eigenvalues.real)
        np.testing.assert_allclose(S.eigenvalues[order].real, [0.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(S.kappas, [math.sqrt(2)] * 2, atol=1e-10)
        assert abs(kappa_V_upper(S) - (1 + math.sqrt(2))) <= 1e-10

    def test_overlap_diagonal_is_kappa_squared(self):
        rng = np.random.default_rng(0)
        M = rng.standard_normal((7, 7))
        S = eigen_decompose(M)
        np.testing.assert_allclose(np.diag(S.overlap).real, S.kappas**2, rtol=1e-10)
        np.testing.assert_allclose(np.diag(S.overlap).imag, 0, atol=1e-10)

    def test_kappa_matches_first_order_perturbation(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((5, 5))
        S = eigen_decompose(M)
        lam = np.linalg.eigvals(M)
        for i in range(5):
            j = int(np.argmin(np.abs(S.eigenvalues - lam[i])))
            assert S.kappas[j] == pytest.approx(_first_order_kappa(M, i), rel=1e-4)

    def test_left_rows_invert_right_vectors(self):
        M = np.random.default_rng(2).standard_normal((6, 6))
        S = eigen_decompose(M)
        np.testing.assert_allclose(S.left_rows @ S.right_vectors, np.eye(6), atol=1e-10)

    @pytest.mark.parametrize("kind", ["symmetric", "orthogonal"])
    def test_normal_matrices_have_unit_kappa(self, kind):
        rng = np.random.default_rng(3)
        for _ in range(50):
            G = rng.standard_normal((6, 6))
            M = G + G.T if kind == "symmetric" else np.linalg.qr(G)[0]
            S = eigen_decompose(M)
            np.testing.assert_allclose(S.kappas, 1.0, atol=1e-8)

    def test_defective_matrix_is_rejected(self):
        with pytest.raises(DefectiveOrClustered):
            eigen_decompose(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_nonfinite_is_rejected(self):
        with pytest.raises(NonFinite):
            eigen_decompose(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_real_mask_uses_tau(self):
        M = np.array([[0.0, -1e-3], [1e-3, 0.0]])
        assert not eigen_decompose(M).real_mask.any()
        assert eigen_decompose(M, tau_real=1e-2).real_mask.all()

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 10_000))
    def test_kappa_at_least_one(self, n, seed):
        M = np.random.default_rng(seed).standard_normal((n, n))
        S = eigen_decompose(M)
        assert np.all(S.kappas >= 1 - 1e-10)
        assert kappa_V_upper(S) >= 1.0


class TestGapStats:
    def test_hand_spectrum(self):
        lam = [0.0, 0.3, 2 + 0.05j, 2 - 0.05j]
        g = gap_stats_from_eigenvalues(lam, delta=0.01, tau_real=1e-12)
        assert g.gap == pytest.approx(0.1)
        assert g.pair == (2, 3)
        assert g.gap_real == pytest.approx(0.3)
        assert g.im_min == pytest.approx(0.05)
        assert g.gap_im_geq == pytest.approx(0.1)

    def test_all_real_spectrum_has_infinite_im_min(self):
        g = gap_stats_from_eigenvalues([0.0, 1.0, 3.0])
        assert g.im_min == math.inf
        assert g.gap == pytest.approx(1.0)

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(4)
        lam = np.stack([np.linalg.eigvals(rng.standard_normal((6, 6))) for _ in range(20)])
        gap, gap_real, im_min, pi, pj = batch_gap_stats(lam, 1e-10)
        for t in range(20):
            g = gap_stats_from_eigenvalues(lam[t], tau_real=1e-10)
            assert gap[t] == g.gap
            assert gap_real[t] == g.gap_real
            assert im_min[t] == g.im_min
            assert (pi[t], pj[t]) == g.pair

    def test_from_summary(self):
        S = eigen_decompose(np.diag([1.0, 2.0, 4.0]))
        assert gap_stats(S).gap == pytest.approx(1.0)


class TestGapCertificate:
    def test_close_pair_satisfies_certificate(self):
        M = np.array([[1.0, 5.0], [0.0, 1.001]])
        r = 0.001
        out = gap_certificate_check(M, 1.0005, r)
        assert out.count_in_disk == 2
        assert out.holds
        assert out.product <= r * r * (1 + 1e-9)

    def test_vacuous_when_disk_holds_one_eigenvalue(self):
        out = gap_certificate_check(np.diag([0.0, 1.0]), 0.0, 0.1)
        assert out.count_in_disk == 1
        assert out.holds

    def test_product_of_two_smallest_singular_values(self):
        M = np.diag([0.0, 0.1, 3.0])
        out = gap_certificate_check(M, 0.05, 0.06)
        s = singular_values(0.05 * np.eye(3) - M)
        assert out.product == pytest.approx(s[-1] * s[-2])
        assert out.holds

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_random_matrices_never_falsify(self, seed):
        M = np.random.default_rng(seed).standard_normal((5, 5))
        lam = np.linalg.eigvals(M)
        g = gap_stats_from_eigenvalues(lam)
        i, j = g.pair
        z = 0.5 * (lam[i] + lam[j])
        assert gap_certificate_check(M, z, g.gap / 2 * (1 + 1e-9) + 1e-15, lam).holds


class TestSingularValues:
    def test_descending_and_match_eigvalsh(self):
        M = np.random.default_rng(5).standard_normal((4, 4))
        s = singular_values(M)
        assert np.all(np.diff(s) <= 0)
        np.testing.assert_allclose(np.sort(s**2), np.linalg.eigvalsh(M.T @ M), rtol=1e-10)
