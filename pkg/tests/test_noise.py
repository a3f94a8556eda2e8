"""
Unit tests for seeded Gaussian noise and operator norm statistics
"""
import numpy as np
import pytest

from src.models.data_models import NoiseModel
from src.models.enums import NoiseStream
from src.models.exceptions import ConfigurationError, InsufficientReplicatesError
from src.services.noise import (
    MOMENT_ORDERS, NORM_QUANTILE_LEVELS, deviation_threshold, norm_stats, sample_noise,
    sample_norms, substream
)


@pytest.fixture
def noise_model():
    return NoiseModel(m=40, n=30, tau=1.0, master_seed=123)


class TestNoiseModel:
    """Test cases for NoiseModel validation"""

    def test_negative_tau(self):
        with pytest.raises(ConfigurationError):
            NoiseModel(m=2, n=2, tau=-1.0, master_seed=0)

    def test_zero_dimension(self):
        with pytest.raises(ConfigurationError):
            NoiseModel(m=0, n=2, tau=1.0, master_seed=0)

    def test_seed_range(self):
        with pytest.raises(ConfigurationError):
            NoiseModel(m=2, n=2, tau=1.0, master_seed=2 ** 64)

    def test_scale(self):
        assert NoiseModel(m=16, n=9, tau=0.5, master_seed=0).scale == pytest.approx(2.0)


class TestSampling:
    """Test cases for substreams and noise draws"""

    def test_draw_is_a_pure_function_of_index(self, noise_model):
        np.testing.assert_array_equal(sample_noise(noise_model, 5), sample_noise(noise_model, 5))

    def test_indices_and_streams_are_independent(self, noise_model):
        base = sample_noise(noise_model, 0)
        assert not np.array_equal(base, sample_noise(noise_model, 1))
        assert not np.array_equal(base, sample_noise(noise_model, 0, NoiseStream.ORACLE))

    def test_tau_rescales_exactly(self, noise_model):
        half = NoiseModel(m=40, n=30, tau=0.5, master_seed=123)
        np.testing.assert_array_equal(2.0 * sample_noise(half, 3), sample_noise(noise_model, 3))

    def test_zero_tau_gives_zero_matrix(self):
        model = NoiseModel(m=3, n=4, tau=0.0, master_seed=1)
        np.testing.assert_array_equal(sample_noise(model, 0), np.zeros((3, 4)))

    def test_negative_index(self):
        with pytest.raises(ConfigurationError):
            substream(0, NoiseStream.REPLICATE, -1)

    def test_thread_count_does_not_change_norms(self, noise_model):
        np.testing.assert_array_equal(
            sample_norms(noise_model, 12, threads=1), sample_norms(noise_model, 12, threads=4)
        )

    def test_entry_moments(self):
        """Test that pooled entries look like N(0, tau^2)"""
        model = NoiseModel(m=200, n=100, tau=2.0, master_seed=9)
        entries = sample_noise(model, 0).ravel()
        assert abs(np.mean(entries)) < 0.05
        assert np.std(entries) == pytest.approx(2.0, rel=0.02)


class TestDeviationThreshold:
    """Test cases for delta(t)"""

    def test_threshold_value(self):
        assert deviation_threshold(10.0, 0.5, 4.0, 2.0) == pytest.approx(12.0)

    def test_negative_t(self):
        with pytest.raises(ConfigurationError):
            deviation_threshold(1.0, 1.0, -0.1, 1.0)


class TestNormStats:
    """Test cases for norm_stats"""

    def test_gordon_ratio_near_one(self, noise_model):
        stats = norm_stats(noise_model, 40, threads=1)

        assert 0.85 < stats.gordon_ratio <= 1.05
        assert stats.min_norm <= stats.mean_norm <= stats.max_norm
        assert stats.normalized_mean == pytest.approx(stats.mean_norm / noise_model.scale)

    def test_concentration_band(self, noise_model):
        """Test that ||X|| deviates from its mean by far less than 5 tau"""
        stats = norm_stats(noise_model, 40, threads=1)
        assert stats.deviation_fraction == 0.0
        assert stats.std_norm < noise_model.tau

    def test_reported_levels(self, noise_model):
        stats = norm_stats(noise_model, 30, threads=1)
        assert tuple(stats.quantiles) == NORM_QUANTILE_LEVELS
        assert tuple(stats.moment_ratios) == MOMENT_ORDERS
        assert stats.to_dict()["replicates"] == 30

    def test_too_few_replicates(self, noise_model):
        with pytest.raises(InsufficientReplicatesError):
            norm_stats(noise_model, 29)

    def test_zero_tau(self):
        with pytest.raises(ConfigurationError):
            norm_stats(NoiseModel(m=3, n=3, tau=0.0, master_seed=0), 30)
