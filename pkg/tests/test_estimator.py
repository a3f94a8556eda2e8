"""
Unit tests for sign alignment, bias estimation and the debiased estimator
"""
import math

import numpy as np
import pytest

from src.models.data_models import BiasEstimate, NoiseModel
from src.models.exceptions import (
    ConfigurationError, DimensionMismatchError, IndexOutOfRangeError,
    MultiplicityNotOneError, NonUnitError
)
from src.services.dilation_spectral import theta_from_uv
from src.services.estimator import (
    align_sign, bias_oracle_mc, debias, debias_observations, debias_pair,
    debias_singular_vectors, estimate_bias_two_sample, linear_form_deviation, linf_error,
    rho_diagnostic, singular_linf_errors
)
from src.services.linalg_core import svd


def _unit(*components):
    vector = np.array(components, dtype=np.float64)
    return vector / np.linalg.norm(vector)


@pytest.fixture
def e1():
    return np.array([1.0, 0.0, 0.0])


class TestAlignSign:
    """Test cases for align_sign"""

    def test_negative_overlap_is_flipped(self, e1):
        aligned = align_sign(_unit(-0.8, 0.6, 0.0), e1)
        np.testing.assert_allclose(aligned.vector, [0.8, -0.6, 0.0])
        assert aligned.reference_overlap == pytest.approx(0.8)

    def test_zero_overlap_uses_sign_convention(self, e1):
        aligned = align_sign(np.array([0.0, -1.0, 0.0]), e1)
        np.testing.assert_array_equal(aligned.vector, [0.0, 1.0, 0.0])
        assert aligned.reference_overlap == 0.0

    def test_non_unit_input(self, e1):
        with pytest.raises(NonUnitError):
            align_sign(np.array([2.0, 0.0, 0.0]), e1)

    def test_length_mismatch(self, e1):
        with pytest.raises(DimensionMismatchError):
            align_sign(np.array([1.0, 0.0]), e1)


class TestTwoSampleEstimator:
    """Test cases for estimate_bias_two_sample and debias"""

    def test_identical_samples_give_zero_bias(self, e1):
        estimate = estimate_bias_two_sample(e1, e1, gamma=0.25)
        assert estimate.b_tilde == 0.0
        assert not estimate.floor_active
        assert estimate.divisor == 1.0

    def test_bias_and_rescaling(self, e1):
        """Test that overlap 0.81 gives b~ = -0.19 and divisor 0.9"""
        theta2 = np.array([0.81, math.sqrt(1.0 - 0.81 ** 2), 0.0])
        theta_hat, estimate = debias_pair(e1, -theta2, gamma=0.25)

        assert estimate.b_tilde == pytest.approx(-0.19)
        assert estimate.divisor == pytest.approx(0.9)
        np.testing.assert_allclose(theta_hat, e1 / 0.9)

    def test_floor_engages_for_orthogonal_samples(self, e1):
        estimate = estimate_bias_two_sample(e1, np.array([0.0, 1.0, 0.0]), gamma=0.16)
        assert estimate.b_tilde == -1.0
        assert estimate.floor_active
        assert estimate.divisor == pytest.approx(0.2)
        assert np.linalg.norm(debias(e1, estimate)) == pytest.approx(5.0)

    @pytest.mark.parametrize("overlap", [0.0, 0.05, 0.3, 0.7, 0.99, 1.0])
    def test_output_norm_range(self, e1, overlap):
        """Test that ||theta^|| stays in [1, 2/sqrt(gamma)]"""
        gamma = 0.25
        theta2 = np.array([overlap, math.sqrt(1.0 - overlap ** 2), 0.0])
        theta_hat, _ = debias_pair(e1, theta2, gamma)
        norm = np.linalg.norm(theta_hat)
        assert 1.0 - 1e-12 <= norm <= 2.0 / math.sqrt(gamma) + 1e-12

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.2, 1.5])
    def test_gamma_outside_unit_interval(self, e1, gamma):
        with pytest.raises(ConfigurationError):
            estimate_bias_two_sample(e1, e1, gamma)

    def test_debias_rejects_bad_gamma(self, e1):
        with pytest.raises(ConfigurationError):
            debias(e1, BiasEstimate(b_tilde=0.0, gamma=2.0, floor_active=False))

    def test_debiased_singular_vectors(self):
        u = _unit(1.0, 2.0)
        v = _unit(3.0, 0.0, 4.0)
        u_hat, v_hat = debias_singular_vectors(theta_from_uv(u, v) / 0.9, 2)
        np.testing.assert_allclose(u_hat, u / 0.9)
        np.testing.assert_allclose(v_hat, v / 0.9)


class TestDebiasObservations:
    """Test cases for debias_observations"""

    def test_noise_free_pair(self, signal_matrix):
        theta_hat, estimate = debias_observations(signal_matrix, signal_matrix.copy(), 2, 0.25)
        decomposition = svd(signal_matrix)
        theta = theta_from_uv(decomposition.left_vectors[:, 1], decomposition.right_vectors[:, 1])

        assert estimate.b_tilde == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(theta_hat, theta, atol=1e-10)

    def test_shape_mismatch(self, signal_matrix):
        with pytest.raises(DimensionMismatchError):
            debias_observations(signal_matrix, signal_matrix.T, 1, 0.25)

    def test_index_out_of_range(self, signal_matrix):
        with pytest.raises(IndexOutOfRangeError):
            debias_observations(signal_matrix, signal_matrix, 4, 0.25)


class TestBiasOracle:
    """Test cases for the Monte Carlo bias oracle"""

    def test_zero_noise(self, signal_matrix):
        oracle = bias_oracle_mc(signal_matrix, NoiseModel(5, 3, 0.0, 1), 1, replicates=10)
        assert oracle.b_hat == 0.0
        assert oracle.std_error == 0.0

    def test_small_noise_shrinks_alignment(self, signal_matrix):
        oracle = bias_oracle_mc(signal_matrix, NoiseModel(5, 3, 0.1, 4), 3, replicates=200, threads=1)
        assert -0.5 < oracle.b_hat < 0.0
        assert oracle.std_error > 0.0
        assert oracle.to_dict()["replicates"] == 200

    def test_thread_count_is_invisible(self, signal_matrix):
        model = NoiseModel(5, 3, 0.1, 4)
        single = bias_oracle_mc(signal_matrix, model, 1, replicates=40, threads=1)
        pooled = bias_oracle_mc(signal_matrix, model, 1, replicates=40, threads=3)
        assert single.b_hat == pooled.b_hat

    def test_repeated_singular_value(self):
        A = np.diag([2.0, 2.0, 1.0])
        with pytest.raises(MultiplicityNotOneError):
            bias_oracle_mc(A, NoiseModel(3, 3, 0.01, 0), 1, replicates=10)

    def test_shape_mismatch(self, signal_matrix):
        with pytest.raises(DimensionMismatchError):
            bias_oracle_mc(signal_matrix, NoiseModel(3, 5, 0.1, 0), 1, replicates=10)


class TestDiagnostics:
    """Test cases for rho, linear forms and l-infinity errors"""

    def test_rho_vanishes_for_scaled_projector(self, signal_projectors):
        _, _, projectors = signal_projectors
        P = projectors.projector(1)
        theta = projectors.cluster(1).theta[:, 0]
        x = _unit(*range(1, 9))

        assert rho_diagnostic(0.8 * P, P, -0.2, theta, x) == pytest.approx(0.0, abs=1e-14)
        assert rho_diagnostic(P, P, -0.2, theta, x) == pytest.approx(0.2 * float(theta @ x))

    def test_linf_error(self):
        assert linf_error([1.0, 0.5], [1.0, 1.0], 0.5) == pytest.approx(0.5)

    def test_linear_form_deviation(self, e1):
        theta_tilde = np.array([0.9, math.sqrt(1 - 0.81), 0.0])
        assert linear_form_deviation(theta_tilde, e1, -0.19, e1) == pytest.approx(0.0, abs=1e-12)

    def test_singular_linf_errors(self):
        u = _unit(1.0, 0.0)
        v = _unit(0.0, 1.0)
        theta = theta_from_uv(u, v)
        linf_u, linf_v = singular_linf_errors(theta, theta, 0.0, 2)
        assert linf_u == pytest.approx(0.0)
        assert linf_v == pytest.approx(0.0)
