# Numerical services and experiment runners for svperturb

from .acceptance import AcceptanceService
from .artifact_store import LocalArtifactStore
from .experiments import MonteCarloExperimentService, scaling_fit

__all__ = [
    'AcceptanceService',
    'LocalArtifactStore',
    'MonteCarloExperimentService',
    'scaling_fit'
]
