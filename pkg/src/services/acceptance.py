"""
Acceptance suites run by ``svperturb verify``

Each suite returns a SuiteResult of named checks (observed value, limit,
pass flag). Absolute constants of the bounds are never taken as given: the scaling
suite checks slopes and stability across a size sweep instead.
"""
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg

from config.logging import get_logger
from config.settings import settings

from ..models.data_models import ClusterProjector, DenseMatrix, NoiseModel, SuiteResult
from ..models.enums import AcceptanceSuite, NoiseStream
from ..models.exceptions import ConfigurationError
from ..models.schemas import ExperimentConfig
from ..utils.instrumentation import OperationTimer
from .dilation_spectral import (
    build_projectors, cluster_spectrum, dilate, dilation_spectrum, resolvent_sum, riesz_projector
)
from .experiments import MonteCarloExperimentService
from .linalg_core import orthonormality_defect, random_orthonormal, svd, sym_eig
from .noise import norm_stats, substream
from .perturbation import empirical_projector

logger = get_logger("acceptance")

ALGEBRA_TOL = 1e-8
RIESZ_MIN_GAP = 0.5
SLOPE_WINDOW = (-0.65, -0.35)
REMAINDER_SHRINK = 0.7
STABILITY_FACTOR = 2.0
FLUCTUATION_CONSTANT_LIMIT = 10.0
DEBIAS_WINDOW = (-0.30, -0.15)
LARGE_DIM = 100
NORM_SUITE_REPLICATES = 200
SHRINK_SIZE_RATIO = 4


def random_signal(rng: np.random.Generator, max_m: int = 30, max_n: int = 20, min_spacing: float = RIESZ_MIN_GAP) -> DenseMatrix:
    """Random A with mixed multiplicities and distinct values at least min_spacing apart"""
    m = int(rng.integers(2, max_m + 1))
    n = int(rng.integers(2, max_n + 1))
    rank = int(rng.integers(1, min(m, n) + 1))
    clusters = int(rng.integers(1, rank + 1))
    cuts = np.sort(rng.choice(np.arange(1, rank), size=clusters - 1, replace=False)) if clusters > 1 else []
    multiplicities = np.diff(np.concatenate([[0], cuts, [rank]])).astype(int)
    distinct = min_spacing + np.cumsum(min_spacing + rng.uniform(0.0, 1.0, clusters))[::-1]
    sigma = np.repeat(distinct, multiplicities)
    U = random_orthonormal(m, rank, rng)
    V = random_orthonormal(n, rank, rng)
    return (U * sigma) @ V.T


def shrink_sizes(sizes: List[int]) -> Tuple[int, int]:
    """Smallest sweep size and the size four times larger, or the largest size when absent"""
    base = min(sizes)
    target = base * SHRINK_SIZE_RATIO
    return base, target if target in sizes else max(sizes)


def block_relation_defect(B: DenseMatrix, delta: List[int], cluster: ClusterProjector, m: int) -> float:
    """Largest violation of the uu/uv/vu block identities on the eigenprojector of B at positions delta.

    The blocks come from eigenvectors of B itself, so agreement with
    ``cluster.projector`` also cross-checks the SVD route.
    """
    P = empirical_projector(B, delta, m, cluster.k).P_tilde
    uu = 2.0 * P[:m, :m]
    uv = 2.0 * P[:m, m:]
    vu = 2.0 * P[m:, :m]
    return float(max(
        np.max(np.abs(uu - uu.T)),
        np.max(np.abs(uu @ uu - uu)),
        np.max(np.abs(vu - uv.T)),
        np.max(np.abs(uv @ vu - uu)),
        np.max(np.abs(P - cluster.projector)),
    ))


class AcceptanceService:
    """Runs the verify suites on top of the experiment service"""

    def __init__(self, experiment_service: MonteCarloExperimentService):
        self.experiments = experiment_service
        self._suites: Dict[AcceptanceSuite, Callable[[ExperimentConfig], SuiteResult]] = {
            AcceptanceSuite.ALGEBRA: self.algebra_suite,
            AcceptanceSuite.BOUNDS: self.bounds_suite,
            AcceptanceSuite.SCALING: self.scaling_suite,
            AcceptanceSuite.DEBIAS: self.debias_suite,
        }

    def run(self, suite: AcceptanceSuite, config: ExperimentConfig) -> List[SuiteResult]:
        selected = list(self._suites) if suite == AcceptanceSuite.ALL else [suite]
        results = []
        for name in selected:
            with OperationTimer(f"verify.{name.value}") as timer:
                result = self._suites[name](config)
            result.duration_s = timer.duration_s
            logger.info("Suite finished", suite=name.value, passed=result.passed, checks=len(result.checks))
            results.append(result)
        return results

    def algebra_suite(self, config: ExperimentConfig, instances: int = 200, riesz_instances: int = 50) -> SuiteResult:
        """Projector identities on random signals and the contour-integral oracle"""
        result = SuiteResult(suite=AcceptanceSuite.ALGEBRA.value)
        worst: Dict[str, float] = {
            "idempotence": 0.0, "block_relation": 0.0, "cross_orthogonality": 0.0,
            "completeness": 0.0, "zero_projector": 0.0, "dilation_spectrum": 0.0,
            "eigenvectors": 0.0, "resolvent_annihilation": 0.0, "riesz_oracle": 0.0,
        }
        nodes = settings.numerics.riesz_nodes

        for i in range(instances):
            rng = substream(config.master_seed, NoiseStream.SIGNAL, i + 1)
            A = random_signal(rng)
            m, n = A.shape
            decomposition = svd(A)
            clustering = cluster_spectrum(decomposition.singular_values, m, n)
            projectors = build_projectors(decomposition, clustering)
            B = dilate(A)
            J = np.diag(np.concatenate([np.ones(m), -np.ones(n)]))

            for s in projectors.signed_indices():
                P = projectors.projector(s)
                worst["idempotence"] = max(worst["idempotence"], float(np.max(np.abs(P @ P - P))))
            # P_s P_t = 0 for s != t is orthonormality of all signed eigenvectors plus P_0 annihilating them
            signed_basis = np.hstack([np.hstack([c.theta, c.theta_negative]) for c in projectors.clusters])
            worst["cross_orthogonality"] = max(
                worst["cross_orthogonality"],
                orthonormality_defect(signed_basis),
                float(np.max(np.abs(projectors.zero_projector @ signed_basis))),
            )

            for cluster in projectors.clusters:
                worst["block_relation"] = max(
                    worst["block_relation"],
                    float(np.max(np.abs(J @ cluster.projector @ J - cluster.negative_projector))),
                    block_relation_defect(B, clustering.delta(cluster.k), cluster, m),
                )
                residual = float(np.max(np.abs(B @ cluster.theta - cluster.mu * cluster.theta)))
                worst["eigenvectors"] = max(worst["eigenvectors"], residual)
                C = resolvent_sum(projectors, cluster.k)
                worst["resolvent_annihilation"] = max(
                    worst["resolvent_annihilation"], float(np.max(np.abs(C @ cluster.projector)))
                )

            # kernel of B from its own SVD
            null_basis = scipy.linalg.null_space(B)
            kernel = null_basis @ null_basis.T
            spectral_sum = sum(c.projector + c.negative_projector for c in projectors.clusters)
            worst["completeness"] = max(
                worst["completeness"],
                float(np.max(np.abs(spectral_sum + kernel - np.eye(m + n)))),
            )
            P0 = projectors.zero_projector
            worst["zero_projector"] = max(
                worst["zero_projector"],
                abs(float(np.trace(P0)) - projectors.zero_multiplicity),
                float(np.max(np.abs(P0 - kernel))),
            )
            eigenvalues = sym_eig(B).eigenvalues
            expected = dilation_spectrum(decomposition.singular_values, m, n)
            worst["dilation_spectrum"] = max(
                worst["dilation_spectrum"], float(np.max(np.abs(eigenvalues - expected)))
            )

            if i < riesz_instances:
                cluster = projectors.cluster(1)
                contour = riesz_projector(B, cluster.mu, cluster.gap / 2.0, nodes)
                worst["riesz_oracle"] = max(
                    worst["riesz_oracle"], float(np.max(np.abs(contour - cluster.projector)))
                )

        for name, observed in worst.items():
            result.add(name, observed, ALGEBRA_TOL, observed <= ALGEBRA_TOL,
                       f"max over {riesz_instances if name == 'riesz_oracle' else instances} instances")
        return result

    def bounds_suite(self, config: ExperimentConfig) -> SuiteResult:
        """Weyl and projector perturbation bounds per replicate plus operator norm concentration"""
        result = SuiteResult(suite=AcceptanceSuite.BOUNDS.value)
        batch = self.experiments.run_replicates(config)
        records = batch.records
        in_regime = sum(r.in_regime for r in records)

        result.add("weyl_violations", sum(not r.weyl_ok for r in records), 0,
                   all(r.weyl_ok for r in records), f"{len(records)} replicates")
        result.add("projector_bound_violations", sum(not r.projector_bound_ok for r in records), 0,
                   all(r.projector_bound_ok for r in records), f"{in_regime} in-regime replicates")
        result.add("remainder_bound_violations", sum(not r.remainder_bound_ok for r in records), 0,
                   all(r.remainder_bound_ok for r in records), f"{in_regime} in-regime replicates")
        result.add("in_regime_replicates", in_regime, 1, in_regime >= 1)

        if config.tau > 0:
            model = NoiseModel(config.m, config.n, config.tau, config.master_seed)
            stats = norm_stats(model, NORM_SUITE_REPLICATES, self.experiments.threads, NoiseStream.REGIME)
            result.add("gordon_upper", stats.gordon_ratio, 1.0, stats.gordon_ratio <= 1.0)
            result.add("deviation_fraction", stats.deviation_fraction, 0.01, stats.deviation_fraction <= 0.01,
                       f"band {settings.monte_carlo.deviation_multiplier:g} tau")
            if min(config.m, config.n) >= LARGE_DIM:
                result.add("gordon_lower", stats.gordon_ratio, 0.85, stats.gordon_ratio >= 0.85)
                for p, ratio in stats.moment_ratios.items():
                    result.add(f"moment_ratio_p{p}", ratio, 2.5, 1.0 <= ratio <= 2.5, "window [1.0, 2.5]")
        return result

    def scaling_suite(self, config: ExperimentConfig) -> SuiteResult:
        """Fluctuation rate, remainder shrinkage and l-inf stability across the size sweep"""
        if not config.size_sweep or len(config.size_sweep) < 3:
            raise ConfigurationError("The scaling suite needs a size_sweep with at least three points")
        result = SuiteResult(suite=AcceptanceSuite.SCALING.value)
        sweep = self.experiments.run_sweep(config)
        fits = {fit.quantity: fit for fit in sweep.fits}

        fluctuation = fits.get("median_fluctuation")
        if fluctuation is None:
            result.add("fluctuation_slope", math.nan, SLOPE_WINDOW[1], False, "fit unavailable")
        else:
            result.add("fluctuation_slope", fluctuation.slope, SLOPE_WINDOW[1],
                       SLOPE_WINDOW[0] <= fluctuation.slope <= SLOPE_WINDOW[1],
                       f"window [{SLOPE_WINDOW[0]}, {SLOPE_WINDOW[1]}], std error {fluctuation.std_error:.3g}")

        ratios = [s.bias.remainder_to_deviation for s in sweep.summaries if s.bias is not None]
        if len(ratios) == len(sweep.summaries) and min(ratios) > 0:
            by_size = {s.max_dim: ratio for s, ratio in zip(sweep.summaries, ratios)}
            ordered = [by_size[size] for size in sorted(by_size)]
            decreasing = all(b < a for a, b in zip(ordered, ordered[1:]))
            result.add("remainder_ratio_monotone", float(decreasing), 1.0, decreasing)
            base, target = shrink_sizes(list(by_size))
            shrink = by_size[target] / by_size[base]
            result.add("remainder_ratio_shrink", shrink, REMAINDER_SHRINK, shrink <= REMAINDER_SHRINK,
                       f"m v n = {target} against {base}")
        else:
            result.add("remainder_ratio_monotone", math.nan, 1.0, False, "bias decomposition unavailable")

        constants = [s.fluctuation_constant for s in sweep.summaries]
        result.add("fluctuation_constant", max(constants), FLUCTUATION_CONSTANT_LIMIT,
                   max(constants) <= FLUCTUATION_CONSTANT_LIMIT)

        medians = [s.linf_normalized_median for s in sweep.summaries]
        if all(v is not None and v > 0 for v in medians):
            spread = max(medians) / min(medians)
            result.add("linf_stability", spread, STABILITY_FACTOR, spread < STABILITY_FACTOR)
        return result

    def debias_suite(self, config: ExperimentConfig, oracle_replicates: Optional[int] = None) -> SuiteResult:
        """Oracle b_k, two-sample consistency and alignment improvement"""
        result = SuiteResult(suite=AcceptanceSuite.DEBIAS.value)
        if oracle_replicates is not None:
            config = ExperimentConfig.model_validate({**config.model_dump(), "oracle_replicates": oracle_replicates})
        signal = self.experiments.build_signal(config)
        oracle = self.experiments.bias_oracle(config, signal)

        slack = 3.0 * oracle.std_error
        result.add("oracle_range", oracle.b_hat, 0.0, -1.0 - slack <= oracle.b_hat <= slack,
                   f"std error {oracle.std_error:.3g}")
        result.add("oracle_in_tuned_window", oracle.b_hat, DEBIAS_WINDOW[1],
                   DEBIAS_WINDOW[0] <= oracle.b_hat <= DEBIAS_WINDOW[1],
                   f"window [{DEBIAS_WINDOW[0]}, {DEBIAS_WINDOW[1]}]")

        batch = self.experiments.run_replicates(config, signal, oracle)
        summary = self.experiments.summarize(batch, config).debias
        if summary is None:
            result.add("paired_replicates", 0, 1, False)
            return result

        improvement_limit = 0.5 * abs(summary.mean_naive_alignment_error)
        result.add("alignment_improvement", abs(summary.mean_debiased_alignment_error), improvement_limit,
                   abs(summary.mean_debiased_alignment_error) <= improvement_limit)
        combined = 3.0 * math.hypot(summary.b_tilde_std_error, oracle.std_error)
        gap = abs(summary.mean_b_tilde - oracle.b_hat)
        result.add("two_sample_consistency", gap, combined, gap <= combined, f"{summary.pairs} pairs")
        return result
