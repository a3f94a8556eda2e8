"""
Environment-specific configuration overrides.
"""
from typing import Dict, Optional, Type

from .settings import Settings, settings


class DevelopmentConfig(Settings):
    """Development environment configuration."""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.logging.level = "DEBUG"


class TestingConfig(Settings):
    """Testing environment configuration."""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.logging.level = "WARNING"
        self.monte_carlo.default_replicates = 200
        self.monte_carlo.oracle_replicates = 500


class ProductionConfig(Settings):
    """Production environment configuration."""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        self.logging.level = "WARNING"


# Configuration factory
CONFIG_MAP: Dict[str, Type[Settings]] = {
    "development": DevelopmentConfig,
    "testing": TestingConfig,
    "production": ProductionConfig,
}


def get_config(environment: Optional[str] = None) -> Settings:
    """Get configuration for the specified environment."""
    if environment is None:
        environment = settings.environment

    config_class = CONFIG_MAP.get(environment.lower(), Settings)
    return config_class(environment=environment.lower())


def activate_config(selected: Settings) -> Settings:
    """Install the groups of ``selected`` on the shared settings object.

    Services and ExperimentConfig defaults read ``config.settings.settings``
    at call time, so the swap reaches all of them.
    """
    settings.environment = selected.environment
    settings.numerics = selected.numerics
    settings.monte_carlo = selected.monte_carlo
    settings.logging = selected.logging
    return settings
