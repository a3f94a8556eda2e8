"""
Configuration settings for svperturb.
"""
import os
from typing import Optional

from pydantic import AliasChoices, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class NumericsSettings(BaseSettings):
    """Tolerances and solver choices for the linear algebra kernels."""

    symmetry_tol: float = Field(default=1e-12, description="Relative asymmetry tolerance")
    unit_tol: float = Field(default=1e-9, description="Tolerance on unit-norm inputs")
    cluster_rel_tol: float = Field(default=1e-8, description="Relative merge tolerance for singular values")
    sign_zero_tol: float = Field(default=1e-12, description="Magnitude below which a component counts as zero")
    eigen_method: str = Field(default="lapack")
    jacobi_max_sweeps: int = Field(default=50)
    riesz_nodes: int = Field(default=64)
    riesz_max_condition: float = Field(default=1e12)

    @field_validator("eigen_method")
    @classmethod
    def validate_eigen_method(cls, v: str) -> str:
        valid_methods = ["lapack", "jacobi"]
        if v.lower() not in valid_methods:
            raise ValueError(f"eigen_method must be one of {valid_methods}")
        return v.lower()

    @field_validator("riesz_nodes")
    @classmethod
    def validate_riesz_nodes(cls, v: int) -> int:
        if v < 16:
            raise ValueError("riesz_nodes must be at least 16")
        return v

    model_config = SettingsConfigDict(env_prefix="SVPERTURB_NUMERICS_")


class MonteCarloSettings(BaseSettings):
    """Defaults for replicate-driven experiments."""

    threads: int = Field(
        default=1,
        validation_alias=AliasChoices("SVPERTURB_THREADS", "SVPERTURB_MC_THREADS"),
    )
    default_replicates: int = Field(default=2000)
    regime_norm_replicates: int = Field(default=100)
    oracle_replicates: int = Field(default=5000)
    gamma: float = Field(default=0.25)
    c2: float = Field(default=1.0)
    deviation_multiplier: float = Field(default=5.0)
    fit_batches: int = Field(default=10)

    @field_validator("threads")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        if v < 1:
            raise ValueError("threads must be at least 1")
        return v

    @field_validator("gamma")
    @classmethod
    def validate_gamma(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        return v

    model_config = SettingsConfigDict(env_prefix="SVPERTURB_MC_", populate_by_name=True)


class LoggingSettings(BaseSettings):
    """Logging configuration settings."""

    level: str = Field(default="INFO")

    @field_validator("level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"LOG_LEVEL must be one of {valid_levels}")
        return v.upper()

    model_config = SettingsConfigDict(env_prefix="SVPERTURB_LOG_")


class Settings(BaseSettings):
    """Main application settings."""

    app_name: str = Field(default="svperturb")
    app_version: str = Field(default="0.1.0")
    environment: str = Field(default="development")

    # Sub-settings
    numerics: NumericsSettings = Field(default_factory=NumericsSettings)
    monte_carlo: MonteCarloSettings = Field(default_factory=MonteCarloSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        valid_envs = ["development", "testing", "production"]
        if v.lower() not in valid_envs:
            raise ValueError(f"ENVIRONMENT must be one of {valid_envs}")
        return v.lower()

    @property
    def version_string(self) -> str:
        return f"{self.app_name} {self.app_version}"

    model_config = SettingsConfigDict(
        env_prefix="SVPERTURB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


def resolve_threads(cli_threads: Optional[int] = None) -> int:
    """Thread count with SVPERTURB_THREADS taking precedence over --threads."""
    env_value = os.environ.get("SVPERTURB_THREADS")
    if env_value:
        return MonteCarloSettings().threads
    if cli_threads is not None:
        if cli_threads < 1:
            raise ValueError("--threads must be at least 1")
        return cli_threads
    return settings.monte_carlo.threads


# Global settings instance
settings = Settings()
