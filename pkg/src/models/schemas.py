"""
Pydantic schemas for experiment configuration files and JSON reports
"""
import math
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.settings import settings

from .enums import FactorKind


class SweepPoint(BaseModel):
    """One size of a scaling sweep; the spectrum is multiplied by ``scale``"""
    model_config = ConfigDict(extra="forbid")

    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    scale: float = Field(..., gt=0)


class ExperimentConfig(BaseModel):
    """Declarative Monte Carlo experiment description"""
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    tau: float = Field(..., ge=0)
    spectrum: List[float] = Field(..., min_length=1)
    factors: FactorKind = FactorKind.IDENTITY
    cluster_index: int = Field(default=1, ge=1)
    replicates: int = Field(default_factory=lambda: settings.monte_carlo.default_replicates, ge=2)
    master_seed: int = Field(default=0, ge=0, lt=2 ** 64)
    gamma: float = Field(default_factory=lambda: settings.monte_carlo.gamma, gt=0, lt=1)
    t_values: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0])
    probe_vectors: Union[Literal["canonical"], int] = "canonical"
    random_probe_pairs: int = Field(default=5, ge=0)
    size_sweep: Optional[List[SweepPoint]] = None
    regime_norm_replicates: int = Field(
        default_factory=lambda: settings.monte_carlo.regime_norm_replicates, ge=30
    )
    oracle_replicates: int = Field(default_factory=lambda: settings.monte_carlo.oracle_replicates, ge=2)
    c2: float = Field(default_factory=lambda: settings.monte_carlo.c2, ge=0)

    @field_validator("spectrum")
    @classmethod
    def validate_spectrum(cls, v: List[float]) -> List[float]:
        if any(not math.isfinite(s) or s <= 0 for s in v):
            raise ValueError("spectrum entries must be finite and positive")
        if any(a < b for a, b in zip(v, v[1:])):
            raise ValueError("spectrum must be non-increasing")
        return v

    @field_validator("t_values")
    @classmethod
    def validate_t_values(cls, v: List[float]) -> List[float]:
        if not v or any(t < 1 for t in v):
            raise ValueError("t_values must be a non-empty list of values >= 1")
        # report keys are formatted as t={t:g}
        if len({f"{t:g}" for t in v}) != len(v):
            raise ValueError("t_values must be distinct at 6 significant digits")
        return v

    @field_validator("probe_vectors")
    @classmethod
    def validate_probe_vectors(cls, v: Union[str, int]) -> Union[str, int]:
        if isinstance(v, int) and v < 1:
            raise ValueError("a random probe count must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_sweep(self) -> "ExperimentConfig":
        if self.size_sweep is not None and len(self.size_sweep) < 1:
            raise ValueError("size_sweep must list at least one point")
        return self

    @property
    def max_dim(self) -> int:
        return max(self.m, self.n)

    def at_size(self, point: SweepPoint) -> "ExperimentConfig":
        """Copy of this config at a sweep point, spectrum rescaled"""
        return self.model_copy(update={
            "m": point.m,
            "n": point.n,
            "spectrum": [s * point.scale for s in self.spectrum],
            "size_sweep": None,
        })


class QuantityStats(BaseModel):
    """Monte Carlo mean, standard error and quantiles of one record column"""
    count: int
    mean: float
    std_error: float
    quantiles: Dict[str, float]


class ProbeFluctuation(BaseModel):
    """Bilinear-form fluctuation statistics of one probe pair"""
    label: str
    mean_form: float
    median_abs_fluctuation: float
    quantiles: Dict[str, float]
    normalized_quantiles: Dict[str, float]


class BiasSummary(BaseModel):
    """Empirical bias decomposition of the pooled mean projector"""
    deviation_norm: float
    deviation_std_error: float
    remainder_norm: float
    remainder_ratio: float
    deviation_ratio: float
    remainder_to_deviation: float
    b_from_mean: Optional[float] = None


class DebiasSummary(BaseModel):
    """Two-sample estimator statistics over paired replicates"""
    pairs: int
    mean_b_tilde: float
    b_tilde_std_error: float
    b_hat: float
    mean_naive_alignment_error: float
    mean_debiased_alignment_error: float
    naive_std_error: float
    debiased_std_error: float
    floor_active_fraction: float


class SummaryReport(BaseModel):
    """Aggregated report of one experiment run"""
    version: str
    config: ExperimentConfig
    replicates: int
    max_dim: int
    gap: float
    in_regime_fraction: float
    localized_fraction: float
    weyl_violations: int
    projector_bound_violations: int
    remainder_bound_violations: int
    quantities: Dict[str, QuantityStats]
    fluctuations: List[ProbeFluctuation]
    fluctuation_constant: float
    deviation_thresholds: Dict[str, float]
    surrogate_scale: float
    linf_normalized_median: Optional[float] = None
    bias: Optional[BiasSummary] = None
    debias: Optional[DebiasSummary] = None


class ScalingFit(BaseModel):
    """Least-squares slope of log(quantity) against log(m v n)"""
    quantity: str
    slope: float
    std_error: float
    intercept: float
    sizes: List[int]
    values: List[float]


class SweepReport(BaseModel):
    """Per-size summaries of a sweep and the fitted slopes"""
    version: str
    summaries: List[SummaryReport]
    fits: List[ScalingFit]
