"""
Service container for dependency injection and singleton instances
"""
from typing import Any, Dict, Optional

from .acceptance import AcceptanceService
from .artifact_store import LocalArtifactStore
from .experiments import MonteCarloExperimentService


class ServiceContainer:
    """Container for service instances"""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(ServiceContainer, cls).__new__(cls)
            cls._instance._initialize()
        return cls._instance

    def _initialize(self, threads: Optional[int] = None):
        """Initialize service instances"""
        self._services: Dict[str, Any] = {}

        self._services["artifact_store"] = LocalArtifactStore()
        self._services["experiment_service"] = MonteCarloExperimentService(
            self._services["artifact_store"], threads
        )
        self._services["acceptance_service"] = AcceptanceService(self._services["experiment_service"])

    def get_service(self, service_name: str) -> Any:
        """Get a service instance by name"""
        return self._services.get(service_name)

    def reset(self, threads: Optional[int] = None) -> None:
        """Rebuild every service, e.g. after the thread count is resolved"""
        self._initialize(threads)


# Global service container instance
service_container = ServiceContainer()


# Service accessor functions
def get_artifact_store() -> LocalArtifactStore:
    """Get artifact store instance"""
    return service_container.get_service("artifact_store")


def get_experiment_service() -> MonteCarloExperimentService:
    """Get Monte Carlo experiment service instance"""
    return service_container.get_service("experiment_service")


def get_acceptance_service() -> AcceptanceService:
    """Get acceptance suite service instance"""
    return service_container.get_service("acceptance_service")
