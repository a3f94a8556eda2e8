"""
Unit tests for the Monte Carlo experiment service
"""
import json

import numpy as np
import pytest

from src.models.exceptions import (
    ConfigurationError, DegenerateFitError, IndexOutOfRangeError, InsufficientReplicatesError,
    SpectrumTooLongError
)
from src.models.schemas import ExperimentConfig
from src.services.experiments import MonteCarloExperimentService, quantile_levels, scaling_fit
from src.services.linalg_core import singular_values


def _with(config, **updates):
    """Validated copy of a config with some fields replaced"""
    return ExperimentConfig.model_validate({**config.model_dump(), **updates})


class TestScalingFit:
    """Test cases for log-log scaling fits"""

    def test_exact_power_law(self):
        sizes = [50, 100, 200, 400]
        values = [3.0 * s ** -0.5 for s in sizes]
        fit = scaling_fit("median_fluctuation", sizes, values)

        assert fit.slope == pytest.approx(-0.5)
        assert fit.std_error == pytest.approx(0.0, abs=1e-12)
        assert fit.intercept == pytest.approx(np.log(3.0))

    def test_too_few_sizes(self):
        with pytest.raises(DegenerateFitError):
            scaling_fit("q", [10, 20], [1.0, 0.5])

    def test_identical_sizes(self):
        with pytest.raises(DegenerateFitError):
            scaling_fit("q", [10, 10, 10], [1.0, 0.9, 0.8])

    def test_non_positive_values(self):
        with pytest.raises(DegenerateFitError):
            scaling_fit("q", [10, 20, 40], [1.0, 0.0, 0.5])

    def test_quantile_levels(self):
        levels = quantile_levels([1.0, 2.0])
        assert list(levels) == ["t=1", "t=2"]
        assert levels["t=1"] == pytest.approx(1.0 - np.exp(-1.0))


class TestSignal:
    """Test cases for signal construction and test vector pairs"""

    def test_signal_has_configured_spectrum(self, experiment_service, small_config):
        A, factors, clustering, projectors = experiment_service.signal_factors(small_config)

        assert A.shape == (12, 8)
        np.testing.assert_allclose(singular_values(A)[:3], [6.0, 3.0, 1.5], atol=1e-12)
        assert clustering.cluster_count == 3
        assert projectors.zero_multiplicity == 20 - 6

    def test_identity_factors(self, experiment_service, small_config):
        config = _with(small_config, factors="identity")
        A, _, _, _ = experiment_service.signal_factors(config)
        assert A[0, 0] == 6.0 and A[1, 1] == 3.0 and A[2, 2] == 1.5

    def test_spectrum_too_long(self, experiment_service):
        config = ExperimentConfig(m=2, n=3, tau=0.1, spectrum=[3.0, 2.0, 1.0])
        with pytest.raises(SpectrumTooLongError):
            experiment_service.signal_factors(config)

    def test_cluster_index_out_of_range(self, experiment_service, small_config):
        config = _with(small_config, cluster_index=4)
        with pytest.raises(IndexOutOfRangeError):
            experiment_service.signal_factors(config)

    def test_regime_check(self, experiment_service, small_config):
        signal = experiment_service.build_signal(small_config)
        assert signal.regime.holds
        assert 0.0 < signal.regime.mean_norm_estimate < signal.regime.threshold

    def test_regime_failure_is_reported(self, experiment_service, small_config):
        config = _with(small_config, tau=2.0)
        assert not experiment_service.build_signal(config).regime.holds

    def test_canonical_vector_pairs(self, experiment_service, small_config):
        pairs = experiment_service.probe_pairs(small_config)
        labels = [p.label for p in pairs]

        assert len(pairs) == 45 + 10 + 2
        assert labels[0] == "e1_e2"
        assert labels[45] == "e1_e1"
        assert labels[-1] == "r2"
        np.testing.assert_allclose(np.linalg.norm(pairs[-1].x), 1.0)

    def test_random_vector_count(self, experiment_service, small_config):
        config = _with(small_config, probe_vectors=3)
        assert [p.label for p in experiment_service.probe_pairs(config)] == ["r1", "r2", "r3"]

    def test_form_vectors_are_distinct(self, experiment_service, small_config):
        labels, forms = experiment_service.form_vectors(experiment_service.probe_pairs(small_config))
        assert labels == [f"e{i}" for i in range(1, 11)] + ["r1x", "r2x"]
        assert forms.shape == (20, 12)


class TestReplicates:
    """Test cases for run_replicates and summarize"""

    def test_records_in_index_order(self, experiment_service, small_config):
        batch = experiment_service.run_replicates(small_config)

        assert [r.index for r in batch.records] == list(range(40))
        assert all(r.weyl_ok and r.in_regime for r in batch.records)
        assert all(r.projector_bound_ok and r.remainder_bound_ok for r in batch.records)
        assert len(batch.records[0].bilinear) == len(batch.probe_labels)

    def test_pairs_share_their_estimate(self, experiment_service, small_config):
        batch = experiment_service.run_replicates(small_config)
        first, second = batch.records[0], batch.records[1]

        assert first.b_tilde == second.b_tilde
        assert -1.0 <= first.b_tilde <= 0.0
        assert batch.b_hat < 0.0

    def test_b_hat_comes_from_oracle_stream(self, experiment_service, small_config):
        batch = experiment_service.run_replicates(small_config)
        oracle = experiment_service.bias_oracle(small_config)
        overlaps = np.array([r.overlap for r in batch.records])

        assert oracle.replicates == 400
        assert batch.b_hat == oracle.b_hat
        assert batch.b_hat != pytest.approx(float(np.mean(overlaps ** 2) - 1.0), rel=1e-12)

    def test_precomputed_oracle_is_used(self, experiment_service, small_config, mocker):
        oracle = experiment_service.bias_oracle(small_config)
        spy = mocker.spy(experiment_service, "bias_oracle")

        batch = experiment_service.run_replicates(small_config, oracle=oracle)
        assert batch.b_hat == oracle.b_hat
        spy.assert_not_called()

    def test_thread_count_does_not_change_bytes(self, artifact_store, small_config):
        """Test that 1 and 4 worker threads write byte-identical records"""
        single = MonteCarloExperimentService(artifact_store, threads=1)
        pooled = MonteCarloExperimentService(artifact_store, threads=4)

        assert artifact_store.records_to_csv(single.run_replicates(small_config), small_config) == \
            artifact_store.records_to_csv(pooled.run_replicates(small_config), small_config)

    def test_summary(self, experiment_service, small_config):
        batch = experiment_service.run_replicates(small_config)
        report = experiment_service.summarize(batch, small_config)

        assert report.replicates == 40
        assert report.weyl_violations == 0
        assert report.in_regime_fraction == 1.0
        assert len(report.fluctuations) == len(batch.probe_labels)
        assert set(report.deviation_thresholds) == {"t=1", "t=2", "t=4"}
        assert report.bias is not None and report.bias.b_from_mean < 0.0
        assert report.debias.pairs == 20
        assert report.surrogate_scale == pytest.approx(1.0 / np.sqrt(40))

    def test_summary_needs_thirty_records(self, experiment_service, small_config):
        config = _with(small_config, replicates=10)
        batch = experiment_service.run_replicates(config)
        with pytest.raises(InsufficientReplicatesError):
            experiment_service.summarize(batch, config)

    def test_zero_noise_run(self, experiment_service, small_config):
        config = _with(small_config, tau=0.0, replicates=30)
        report = experiment_service.summarize(experiment_service.run_replicates(config), config)

        assert report.quantities["projector_deviation"].mean == pytest.approx(0.0, abs=1e-12)
        assert report.debias.mean_b_tilde == pytest.approx(0.0, abs=1e-12)


class TestEmit:
    """Test cases for simulate, emit and report_from_records"""

    def test_simulate_writes_artifacts(self, experiment_service, small_config, tmp_path):
        paths = experiment_service.simulate(small_config, tmp_path / "run")

        assert paths["records"].read_text().startswith("# svperturb 0.1.0 config=")
        summary = json.loads(paths["summary"].read_text())
        assert summary["replicates"] == 40
        assert (tmp_path / "run" / "projectors" / "manifest.json").exists()
        assert "sweep" not in paths

    def test_report_from_records_matches_simulation(self, experiment_service, small_config, tmp_path):
        """Test that the records file alone reproduces the fluctuation and debias statistics"""
        paths = experiment_service.simulate(small_config, tmp_path)
        original = experiment_service.summarize(
            experiment_service.run_replicates(small_config), small_config
        )
        rebuilt = experiment_service.report_from_records(paths["records"], tmp_path / "again.json")

        assert rebuilt.fluctuations == original.fluctuations
        assert rebuilt.debias == original.debias
        assert rebuilt.bias is None
        assert (tmp_path / "again.json").exists()

    def test_sweep_requires_points(self, experiment_service, small_config):
        with pytest.raises(ConfigurationError):
            experiment_service.run_sweep(small_config)

    @pytest.mark.slow
    def test_sweep_fits(self, experiment_service, small_config, tmp_path):
        config = _with(small_config, size_sweep=[
            {"m": 12, "n": 8, "scale": 1.0},
            {"m": 24, "n": 16, "scale": 1.4},
            {"m": 48, "n": 32, "scale": 2.0},
        ])
        sweep = experiment_service.run_sweep(config, tmp_path)

        assert [s.max_dim for s in sweep.summaries] == [12, 24, 48]
        assert "median_fluctuation" in {fit.quantity for fit in sweep.fits}
        assert (tmp_path / "records_48x32.csv").exists()
