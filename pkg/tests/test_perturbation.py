"""
Unit tests for empirical projectors and the first order perturbation split
"""
import numpy as np
import pytest

from src.models.exceptions import DimensionMismatchError, IndexOutOfRangeError
from src.services.dilation_spectral import build_projectors, cluster_spectrum, dilate
from src.services.linalg_core import operator_norm, svd
from src.services.perturbation import (
    bias_decomposition, bilinear_form, cluster_localized, empirical_projector,
    empirical_projector_from_svd, linear_term, perturbation_split, spectral_deviation,
    weyl_deviation
)


@pytest.fixture
def small_noise(rng):
    """5 x 3 Gaussian perturbation far below the smallest gap"""
    return 1e-3 * rng.standard_normal((5, 3))


class TestEmpiricalProjector:
    """Test cases for empirical_projector and empirical_projector_from_svd"""

    def test_noise_free_projector_is_exact(self, signal_matrix, signal_projectors):
        _, clustering, projectors = signal_projectors
        for k in (1, 2, 3):
            empirical = empirical_projector(dilate(signal_matrix), clustering.delta(k), 5, k)
            np.testing.assert_allclose(empirical.P_tilde, projectors.projector(k), atol=1e-12)

    def test_svd_route_matches_eigen_route(self, signal_matrix, small_noise):
        noisy = signal_matrix + small_noise
        from_eig = empirical_projector(dilate(noisy), [2], 5, 2)
        from_svd = empirical_projector_from_svd(svd(noisy), [2], 5, 3, 2)

        np.testing.assert_allclose(from_svd.P_tilde, from_eig.P_tilde, atol=1e-10)
        np.testing.assert_allclose(from_svd.eigenvalues, from_eig.eigenvalues, atol=1e-12)

    def test_blocks_reassemble(self, signal_matrix, small_noise):
        empirical = empirical_projector_from_svd(svd(signal_matrix + small_noise), [1], 5, 3)
        np.testing.assert_allclose(empirical.reassemble(), empirical.P_tilde, atol=1e-15)
        assert empirical.multiplicity == 1

    def test_positions_out_of_range(self, signal_matrix):
        with pytest.raises(IndexOutOfRangeError):
            empirical_projector(dilate(signal_matrix), [9], 5)

    def test_svd_shape_mismatch(self, signal_matrix):
        with pytest.raises(DimensionMismatchError):
            empirical_projector_from_svd(svd(signal_matrix), [1], 4, 3)


class TestPerturbationSplit:
    """Test cases for the L_k + S_k split"""

    def test_split_is_exact(self, signal_matrix, signal_projectors, small_noise):
        _, clustering, projectors = signal_projectors
        B = dilate(signal_matrix)
        Gamma = dilate(small_noise)
        split = perturbation_split(B, Gamma, projectors, clustering, 1)
        empirical = empirical_projector(B + Gamma, [1], 5, 1)

        np.testing.assert_allclose(
            split.L + split.S, empirical.P_tilde - projectors.projector(1), atol=1e-12
        )
        np.testing.assert_allclose(split.L, linear_term(Gamma, projectors, 1), atol=1e-14)

    def test_restricted_norms_match_full_norms(self, signal_matrix, signal_projectors, small_noise):
        _, clustering, projectors = signal_projectors
        split = perturbation_split(dilate(signal_matrix), dilate(small_noise), projectors, clustering, 2)

        assert split.linear_norm == pytest.approx(operator_norm(split.L), rel=1e-8)
        assert split.remainder_norm == pytest.approx(operator_norm(split.S), rel=1e-6)

    def test_bounds_hold_in_regime(self, signal_matrix, signal_projectors, small_noise):
        _, clustering, projectors = signal_projectors
        for k in (1, 2, 3):
            split = perturbation_split(dilate(signal_matrix), dilate(small_noise), projectors, clustering, k)
            assert split.in_regime
            assert split.projector_deviation_norm <= split.projector_bound
            assert split.remainder_norm <= split.remainder_bound

    def test_remainder_is_second_order(self, signal_matrix, signal_projectors, small_noise):
        """Test that doubling the noise roughly quadruples ||S_k||"""
        _, clustering, projectors = signal_projectors
        B = dilate(signal_matrix)
        single = perturbation_split(B, dilate(small_noise), projectors, clustering, 1)
        double = perturbation_split(B, dilate(2.0 * small_noise), projectors, clustering, 1)

        assert 3.5 < double.remainder_norm / single.remainder_norm < 4.5
        assert double.linear_norm / single.linear_norm == pytest.approx(2.0, rel=1e-10)

    @pytest.mark.parametrize("k", [1, 2])
    def test_remainder_vanishes_quadratically(self, rng, k):
        """Test that ||S_k(eps Gamma)|| / eps^2 stays bounded as eps shrinks"""
        A = np.diag([3.0, 1.0])
        decomposition = svd(A)
        clustering = cluster_spectrum(decomposition.singular_values, 2, 2)
        projectors = build_projectors(decomposition, clustering)
        Gamma = dilate(rng.standard_normal((2, 2)))
        Gamma /= operator_norm(Gamma)

        ratios = []
        for eps in (1e-2, 1e-3):
            split = perturbation_split(dilate(A), eps * Gamma, projectors, clustering, k)
            assert split.in_regime
            assert split.remainder_norm <= split.remainder_bound
            assert split.remainder_norm < 0.25 * split.linear_norm
            ratios.append(split.remainder_norm / eps**2)

        assert ratios[1] < 2.0 * ratios[0] + 1e-6
        assert max(ratios) < 14.0 / clustering.gap(k) ** 2

    def test_linear_term_is_directional_derivative(self, signal_matrix, signal_projectors, rng):
        _, clustering, projectors = signal_projectors
        B = dilate(signal_matrix)
        Gamma = dilate(rng.standard_normal((5, 3)))
        eps = 1e-6
        plus = empirical_projector(B + eps * Gamma, clustering.delta(2), 5, 2).P_tilde
        minus = empirical_projector(B - eps * Gamma, clustering.delta(2), 5, 2).P_tilde

        np.testing.assert_allclose((plus - minus) / (2 * eps), linear_term(Gamma, projectors, 2), atol=1e-6)

    def test_linear_term_has_zero_mean(self, signal_projectors):
        """Test that the Monte Carlo mean of L_k under Gaussian noise shrinks like 1/sqrt(R)"""
        _, _, projectors = signal_projectors
        draws = np.random.default_rng(3).standard_normal((4000, 5, 3))
        mean = sum(linear_term(dilate(X), projectors, 1) for X in draws) / len(draws)
        spread = np.mean([operator_norm(linear_term(dilate(X), projectors, 1)) for X in draws[:200]])

        assert operator_norm(mean) < 5.0 * spread / np.sqrt(len(draws))

    def test_large_noise_leaves_regime(self, signal_matrix, signal_projectors, rng):
        _, clustering, projectors = signal_projectors
        split = perturbation_split(
            dilate(signal_matrix), dilate(3.0 * rng.standard_normal((5, 3))), projectors, clustering, 3
        )
        assert not split.in_regime

    def test_gamma_shape_mismatch(self, signal_matrix, signal_projectors):
        _, clustering, projectors = signal_projectors
        with pytest.raises(DimensionMismatchError):
            perturbation_split(dilate(signal_matrix), np.zeros((7, 7)), projectors, clustering, 1)


class TestSpectralDiagnostics:
    """Test cases for Weyl shifts, localization and bilinear forms"""

    def test_weyl_inequality(self, signal_matrix, small_noise):
        deviation = weyl_deviation(dilate(signal_matrix), dilate(signal_matrix + small_noise))
        assert deviation.satisfies_weyl()
        assert deviation.gamma_norm == pytest.approx(operator_norm(small_noise))

    def test_weyl_shift_by_identity(self, signal_matrix):
        """Test that B + cI moves every eigenvalue by exactly c"""
        B = dilate(signal_matrix)
        deviation = weyl_deviation(B, B + 0.3 * np.eye(8))

        np.testing.assert_allclose(deviation.shifts, 0.3, atol=1e-12)
        assert deviation.max_shift == pytest.approx(0.3)
        assert deviation.gamma_norm == pytest.approx(0.3)
        assert deviation.satisfies_weyl()

    def test_spectral_deviation_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            spectral_deviation(np.ones(3), np.ones(4), 0.1)

    def test_bilinear_form(self):
        M = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert bilinear_form(M, [1.0, 0.0], [0.0, 1.0]) == 2.0
        with pytest.raises(DimensionMismatchError):
            bilinear_form(M, [1.0], [1.0, 0.0])

    def test_cluster_localized(self, signal_projectors):
        _, clustering, _ = signal_projectors
        assert cluster_localized(np.array([4.1, 2.0, 1.0]), clustering, 1)
        # window of mu_2 = 2 is (1.5, 2.5): the third value enters it, the second leaves it
        assert not cluster_localized(np.array([4.0, 2.6, 2.4]), clustering, 2)

    def test_bias_decomposition_of_scaled_projector(self, signal_projectors):
        """Test that (1 + b) P_k gives b_k = b and no remainder"""
        _, _, projectors = signal_projectors
        cluster = projectors.cluster(1)
        decomposition = bias_decomposition(0.9 * cluster.projector, cluster)

        assert decomposition.b_k == pytest.approx(-0.1)
        assert decomposition.remainder_norm == pytest.approx(0.0, abs=1e-14)
        assert decomposition.deviation_norm == pytest.approx(0.1)
