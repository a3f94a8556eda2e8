"""
Seeded Gaussian noise and operator norm concentration diagnostics

Each draw comes from its own Philox substream keyed by
(master_seed, stream tag, replicate index) through ``numpy.random.SeedSequence``
spawn keys, so a replicate never depends on which thread produced it or on
how many replicates ran before it. Gaussians come from numpy's ziggurat
``standard_normal``; the output is ``tau * Z`` so changing tau rescales a
draw exactly.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional

import numpy as np

from config.logging import get_logger
from config.settings import settings

from ..models.data_models import DenseMatrix, NoiseModel, NormStats
from ..models.enums import NoiseStream
from ..models.exceptions import ConfigurationError, InsufficientReplicatesError
from .linalg_core import operator_norm

logger = get_logger("noise")

NORM_QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
MOMENT_ORDERS = (1, 2, 4)
MIN_NORM_REPLICATES = 30


def substream(master_seed: int, stream: NoiseStream, index: int) -> np.random.Generator:
    """Independent generator for one (stream, index) pair of a master seed"""
    if index < 0:
        raise ConfigurationError("Replicate index must be non-negative", {"index": index})
    sequence = np.random.SeedSequence(master_seed, spawn_key=(stream.value, index))
    return np.random.Generator(np.random.Philox(sequence))


def sample_noise(
    model: NoiseModel,
    replicate_index: int,
    stream: NoiseStream = NoiseStream.REPLICATE,
) -> DenseMatrix:
    """m x n matrix with i.i.d. N(0, tau^2) entries, a pure function of (model, index, stream)"""
    rng = substream(model.master_seed, stream, replicate_index)
    return model.tau * rng.standard_normal((model.m, model.n))


def deviation_threshold(mean_norm_estimate: float, tau: float, t: float, c2: float) -> float:
    """delta(t) = E||X|| + c2 * tau * sqrt(t)"""
    if t < 0:
        raise ConfigurationError("t must be non-negative", {"t": t})
    return mean_norm_estimate + c2 * tau * math.sqrt(t)


def sample_norms(
    model: NoiseModel,
    replicates: int,
    threads: int = 1,
    stream: NoiseStream = NoiseStream.REPLICATE,
) -> np.ndarray:
    """||X_i|| for i = 0..replicates-1, in index order"""
    def norm_of(index: int) -> float:
        return operator_norm(sample_noise(model, index, stream))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            norms = list(executor.map(norm_of, range(replicates)))
    else:
        norms = [norm_of(i) for i in range(replicates)]
    return np.asarray(norms, dtype=np.float64)


def norm_stats(
    model: NoiseModel,
    replicates: int,
    threads: Optional[int] = None,
    stream: NoiseStream = NoiseStream.REPLICATE,
) -> NormStats:
    """Monte Carlo summary of ||X|| with the concentration and moment diagnostics.

    Raises:
        InsufficientReplicatesError: fewer than 30 replicates
        ConfigurationError: tau = 0 (normalizations undefined)
    """
    if replicates < MIN_NORM_REPLICATES:
        raise InsufficientReplicatesError(
            f"norm_stats needs at least {MIN_NORM_REPLICATES} replicates",
            {"replicates": replicates}
        )
    if model.tau <= 0:
        raise ConfigurationError("norm_stats needs tau > 0", {"tau": model.tau})

    threads = threads or settings.monte_carlo.threads
    norms = sample_norms(model, replicates, threads, stream)

    mean_norm = float(np.mean(norms))
    scale = model.scale
    quantiles: Dict[float, float] = {
        p: float(v) for p, v in zip(NORM_QUANTILE_LEVELS, np.quantile(norms, NORM_QUANTILE_LEVELS))
    }
    moment_ratios = {
        p: float(np.mean(norms ** p) ** (1.0 / p) / scale) for p in MOMENT_ORDERS
    }
    band = settings.monte_carlo.deviation_multiplier * model.tau

    stats = NormStats(
        m=model.m,
        n=model.n,
        tau=model.tau,
        seed=model.master_seed,
        replicates=replicates,
        mean_norm=mean_norm,
        std_norm=float(np.std(norms, ddof=1)),
        min_norm=float(np.min(norms)),
        max_norm=float(np.max(norms)),
        normalized_mean=mean_norm / scale,
        gordon_ratio=mean_norm / (model.tau * (math.sqrt(model.m) + math.sqrt(model.n))),
        deviation_fraction=float(np.mean(np.abs(norms - mean_norm) > band)),
        quantiles=quantiles,
        moment_ratios=moment_ratios,
    )
    logger.debug(
        "Computed noise norm statistics",
        m=model.m, n=model.n, tau=model.tau, replicates=replicates,
        stream=stream.name, mean_norm=stats.mean_norm
    )
    return stats
