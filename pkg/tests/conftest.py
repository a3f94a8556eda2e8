"""
Shared fixtures for svperturb tests
"""
import numpy as np
import pytest

from config.settings import settings
from src.models.schemas import ExperimentConfig
from src.services.artifact_store import LocalArtifactStore
from src.services.dilation_spectral import build_projectors, cluster_spectrum
from src.services.experiments import MonteCarloExperimentService
from src.services.linalg_core import svd


@pytest.fixture(autouse=True)
def restore_settings():
    """Undo environment activation done by CLI runs"""
    saved = {name: getattr(settings, name) for name in ("environment", "numerics", "monte_carlo", "logging")}
    saved_level = settings.logging.level
    yield
    for name, value in saved.items():
        setattr(settings, name, value)
    settings.logging.level = saved_level


@pytest.fixture
def rng():
    """Seeded generator so fixtures are reproducible"""
    return np.random.default_rng(20240601)


@pytest.fixture
def signal_matrix():
    """5 x 3 matrix with singular values 4, 2, 1 and random orthogonal factors"""
    rng = np.random.default_rng(7)
    left, _ = np.linalg.qr(rng.standard_normal((5, 3)))
    right, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    return (left * np.array([4.0, 2.0, 1.0])) @ right.T


@pytest.fixture
def signal_projectors(signal_matrix):
    """Decomposition, clustering and projector set of signal_matrix"""
    decomposition = svd(signal_matrix)
    clustering = cluster_spectrum(decomposition.singular_values, 5, 3)
    return decomposition, clustering, build_projectors(decomposition, clustering)


@pytest.fixture
def small_config():
    """Fast experiment well inside the small-noise regime"""
    return ExperimentConfig(
        m=12,
        n=8,
        tau=0.02,
        spectrum=[6.0, 3.0, 1.5],
        factors="random",
        replicates=40,
        master_seed=11,
        regime_norm_replicates=30,
        oracle_replicates=400,
        random_probe_pairs=2,
    )


@pytest.fixture
def artifact_store(tmp_path):
    return LocalArtifactStore(tmp_path)


@pytest.fixture
def experiment_service(artifact_store):
    return MonteCarloExperimentService(artifact_store, threads=1)
