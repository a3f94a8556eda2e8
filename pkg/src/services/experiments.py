"""
Monte Carlo experiment runner

A configured signal A = U diag(sigma) V^T is observed as A + X for R seeded
noise draws. Every replicate is a pure function of (config, index); replicates
run on a thread pool and are collected in index order, so records and CSV
bytes do not depend on the thread count. E P~_k is replaced throughout by the
pooled replicate mean, whose Monte Carlo error is of order 1/sqrt(R).
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from config.logging import get_logger
from config.settings import settings

from ..models.data_models import (
    BiasOracle, DenseMatrix, NoiseModel, ProbePair, ProjectorSet, RegimeCheck, ReplicateBatch,
    ReplicateRecord, SignalBundle, SpectrumClustering, SvdDecomposition, Vector
)
from ..models.enums import FactorKind, NoiseStream
from ..models.exceptions import (
    ConfigurationError, DegenerateFitError, InsufficientReplicatesError, SpectrumTooLongError
)
from ..models.schemas import (
    BiasSummary, DebiasSummary, ExperimentConfig, ProbeFluctuation, QuantityStats,
    ScalingFit, SummaryReport, SweepReport
)
from ..utils.instrumentation import log_operation
from .artifact_store import LocalArtifactStore
from .dilation_spectral import build_projectors, cluster_spectrum, dilate, dilation_spectrum
from .estimator import (
    align_sign, bias_oracle_mc, debias, estimate_bias_two_sample, linf_error, rho_value,
    singular_linf_errors
)
from .linalg_core import operator_norm, random_orthonormal, svd
from .noise import deviation_threshold, norm_stats, sample_noise, substream
from .perturbation import (
    bias_decomposition, cluster_localized, empirical_projector_from_svd, perturbation_split,
    spectral_deviation
)

logger = get_logger("experiments")

CANONICAL_PROBE_LIMIT = 10
MIN_SUMMARY_RECORDS = 30
MIN_FIT_SIZES = 3
BOUND_TOL = 1e-9

RECORD_QUANTITIES = [
    "norm_gamma", "max_shift", "projector_deviation", "linear_norm", "remainder_norm",
    "overlap", "b_tilde", "naive_alignment_error", "debiased_alignment_error", "rho",
    "linf_error", "linf_u", "linf_v",
]
SWEEP_QUANTITIES = [
    "median_fluctuation", "deviation_norm", "remainder_norm", "remainder_to_deviation",
    "linf_normalized_median",
]


@dataclass(frozen=True)
class _RunContext:
    """Everything a replicate needs, shared read-only across worker threads"""
    config: ExperimentConfig
    model: NoiseModel
    signal: SignalBundle
    B: DenseMatrix
    reference_spectrum: Vector
    probe_x: DenseMatrix
    probe_y: DenseMatrix
    forms: DenseMatrix
    theta: Optional[Vector]


def quantile_levels(t_values: Sequence[float]) -> Dict[str, float]:
    """Probability levels 1 - exp(-t) keyed by t"""
    return {f"t={t:g}": 1.0 - math.exp(-t) for t in t_values}


def _quantity_stats(values: np.ndarray, levels: Dict[str, float]) -> QuantityStats:
    count = int(values.size)
    return QuantityStats(
        count=count,
        mean=float(np.mean(values)),
        std_error=float(np.std(values, ddof=1) / math.sqrt(count)) if count > 1 else 0.0,
        quantiles={key: float(np.quantile(values, p)) for key, p in levels.items()},
    )


def scaling_fit(quantity: str, sizes: Sequence[int], values: Sequence[float]) -> ScalingFit:
    """Least-squares slope of log(value) against log(size) with its standard error"""
    sizes_arr = np.asarray(sizes, dtype=np.float64)
    values_arr = np.asarray(values, dtype=np.float64)
    if sizes_arr.size < MIN_FIT_SIZES or sizes_arr.size != values_arr.size:
        raise DegenerateFitError(
            f"A scaling fit needs at least {MIN_FIT_SIZES} paired sizes",
            {"quantity": quantity, "sizes": list(sizes), "values": list(values)}
        )
    if np.all(sizes_arr == sizes_arr[0]):
        raise DegenerateFitError("All sweep sizes are identical", {"quantity": quantity, "size": int(sizes_arr[0])})
    if np.any(~np.isfinite(values_arr)) or np.any(values_arr <= 0):
        raise DegenerateFitError("A log-log fit needs positive values", {"quantity": quantity})

    result = stats.linregress(np.log(sizes_arr), np.log(values_arr))
    return ScalingFit(
        quantity=quantity,
        slope=float(result.slope),
        std_error=float(result.stderr),
        intercept=float(result.intercept),
        sizes=[int(s) for s in sizes],
        values=[float(v) for v in values],
    )


class MonteCarloExperimentService:
    """Builds signals, runs replicates, aggregates and emits reports"""

    def __init__(self, artifact_store: Optional[LocalArtifactStore] = None, threads: Optional[int] = None):
        self.artifact_store = artifact_store or LocalArtifactStore()
        self.threads = threads or settings.monte_carlo.threads

    # Signal

    def signal_factors(self, config: ExperimentConfig) -> Tuple[DenseMatrix, SvdDecomposition, SpectrumClustering, ProjectorSet]:
        """A with exactly the configured singular values, its factors, clustering and projectors"""
        rank = len(config.spectrum)
        if rank > min(config.m, config.n):
            raise SpectrumTooLongError(
                "Spectrum is longer than min(m, n)",
                {"length": rank, "m": config.m, "n": config.n}
            )
        sigma = np.asarray(config.spectrum, dtype=np.float64)
        if config.factors == FactorKind.RANDOM:
            rng = substream(config.master_seed, NoiseStream.SIGNAL, 0)
            U = random_orthonormal(config.m, rank, rng)
            V = random_orthonormal(config.n, rank, rng)
        else:
            U = np.eye(config.m)[:, :rank]
            V = np.eye(config.n)[:, :rank]

        A = (U * sigma) @ V.T
        factors = SvdDecomposition(singular_values=sigma.copy(), left_vectors=U, right_vectors=V)
        clustering = cluster_spectrum(sigma, config.m, config.n)
        clustering.check_index(config.cluster_index)
        return A, factors, clustering, build_projectors(factors, clustering)

    @log_operation("MonteCarloExperimentService")
    def build_signal(self, config: ExperimentConfig) -> SignalBundle:
        """Signal plus the regime check E||X|| <= (1 - gamma) g_k / 2 on the regime stream"""
        A, factors, clustering, projectors = self.signal_factors(config)
        gap = clustering.gap(config.cluster_index)

        if config.tau > 0:
            model = NoiseModel(config.m, config.n, config.tau, config.master_seed)
            mean_norm = norm_stats(
                model, config.regime_norm_replicates, self.threads, NoiseStream.REGIME
            ).mean_norm
        else:
            mean_norm = 0.0
        threshold = (1.0 - config.gamma) * gap / 2.0
        regime = RegimeCheck(
            mean_norm_estimate=mean_norm,
            threshold=threshold,
            holds=projectors.regime_holds(config.cluster_index, mean_norm, config.gamma),
        )
        if not regime.holds:
            logger.warning(
                "Regime condition fails; bounds are vacuous for this run",
                mean_norm=mean_norm, threshold=threshold, gap=gap
            )
        return SignalBundle(A=A, svd=factors, clustering=clustering, projectors=projectors, regime=regime)

    # Probes

    def probe_pairs(self, config: ExperimentConfig) -> List[ProbePair]:
        """Canonical pairs (e_i, e_j), i < j then i = j, over the first min(10, m+n) indices, plus seeded random unit pairs"""
        size = config.m + config.n
        pairs: List[ProbePair] = []
        if config.probe_vectors == "canonical":
            limit = min(CANONICAL_PROBE_LIMIT, size)
            identity = np.eye(size)
            for i in range(limit):
                for j in range(i + 1, limit):
                    pairs.append(ProbePair(f"e{i + 1}_e{j + 1}", identity[:, i], identity[:, j]))
            for i in range(limit):
                pairs.append(ProbePair(f"e{i + 1}_e{i + 1}", identity[:, i], identity[:, i]))
            random_count = config.random_probe_pairs
        else:
            random_count = int(config.probe_vectors)

        for j in range(random_count):
            rng = substream(config.master_seed, NoiseStream.PROBE, j)
            x = rng.standard_normal(size)
            y = rng.standard_normal(size)
            pairs.append(ProbePair(f"r{j + 1}", x / np.linalg.norm(x), y / np.linalg.norm(y)))
        return pairs

    @staticmethod
    def form_vectors(pairs: Sequence[ProbePair]) -> Tuple[List[str], DenseMatrix]:
        """Distinct x vectors of the probe pairs, used for the linear forms <theta~, x>"""
        labels: List[str] = []
        columns: List[Vector] = []
        for pair in pairs:
            label = pair.label.split("_")[0] if "_" in pair.label else f"{pair.label}x"
            if label not in labels:
                labels.append(label)
                columns.append(pair.x)
        return labels, np.column_stack(columns) if columns else np.zeros((0, 0))

    # Replicates

    def _context(self, config: ExperimentConfig, signal: SignalBundle) -> Tuple[_RunContext, List[str], List[str]]:
        pairs = self.probe_pairs(config)
        form_labels, forms = self.form_vectors(pairs)
        cluster = signal.projectors.cluster(config.cluster_index)
        theta = cluster.theta[:, 0].copy() if cluster.multiplicity == 1 else None
        size = config.m + config.n
        context = _RunContext(
            config=config,
            model=NoiseModel(config.m, config.n, config.tau, config.master_seed),
            signal=signal,
            B=dilate(signal.A),
            reference_spectrum=dilation_spectrum(signal.svd.singular_values, config.m, config.n),
            probe_x=np.column_stack([p.x for p in pairs]) if pairs else np.zeros((size, 0)),
            probe_y=np.column_stack([p.y for p in pairs]) if pairs else np.zeros((size, 0)),
            forms=forms if theta is not None else np.zeros((size, 0)),
            theta=theta,
        )
        return context, [p.label for p in pairs], form_labels if theta is not None else []

    @staticmethod
    def _replicate(context: _RunContext, index: int) -> Tuple[ReplicateRecord, DenseMatrix]:
        config = context.config
        signal = context.signal
        k = config.cluster_index
        X = sample_noise(context.model, index)
        noisy = svd(signal.A + X)
        norm_gamma = operator_norm(X)

        deviation = spectral_deviation(
            context.reference_spectrum,
            dilation_spectrum(noisy.singular_values, config.m, config.n),
            norm_gamma,
        )
        empirical = empirical_projector_from_svd(
            noisy, signal.clustering.delta(k), config.m, config.n, k
        )
        split = perturbation_split(
            context.B, dilate(X), signal.projectors, signal.clustering, k,
            empirical=empirical, gamma_norm=norm_gamma,
        )
        basis = empirical.basis
        bilinear = np.sum((context.probe_x.T @ basis) * (context.probe_y.T @ basis), axis=1)

        record = ReplicateRecord(
            index=index,
            norm_gamma=norm_gamma,
            in_regime=split.in_regime,
            cluster_localized=cluster_localized(noisy.singular_values, signal.clustering, k),
            max_shift=deviation.max_shift,
            weyl_ok=deviation.satisfies_weyl(BOUND_TOL),
            projector_deviation=split.projector_deviation_norm,
            linear_norm=split.linear_norm,
            remainder_norm=split.remainder_norm,
            projector_bound_ok=(not split.in_regime)
            or split.projector_deviation_norm <= split.projector_bound + BOUND_TOL,
            remainder_bound_ok=(not split.in_regime)
            or split.remainder_norm <= split.remainder_bound + BOUND_TOL,
            bilinear=[float(v) for v in bilinear],
        )

        if context.theta is None:
            return record, basis
        aligned = align_sign(basis[:, 0], context.theta)
        record.overlap = aligned.reference_overlap
        record.linear_forms = [float(v) for v in context.forms.T @ aligned.vector]
        return record, aligned.vector.reshape(-1, 1)

    def _pair_and_rescale(self, batch: ReplicateBatch, context: _RunContext, b_hat: float) -> None:
        """Two-sample estimates on pairs (2i, 2i+1) and the b-dependent diagnostics"""
        theta = context.theta
        gamma = context.config.gamma
        m = context.config.m
        scale = math.sqrt(max(0.0, 1.0 + b_hat))
        vectors = [basis[:, 0] for basis in batch.bases]

        for record, theta_tilde in zip(batch.records, vectors):
            record.rho = rho_value(theta_tilde * record.overlap, theta, b_hat, theta)
            record.linf_error = linf_error(theta_tilde, theta, scale)
            record.linf_u, record.linf_v = singular_linf_errors(theta_tilde, theta, b_hat, m)

        for first in range(0, len(vectors) - 1, 2):
            estimate = estimate_bias_two_sample(vectors[first], vectors[first + 1], gamma)
            for i in (first, first + 1):
                record = batch.records[i]
                record.b_tilde = estimate.b_tilde
                record.floor_active = estimate.floor_active
                record.naive_alignment_error = record.overlap - 1.0
                record.debiased_alignment_error = float(debias(vectors[i], estimate) @ theta) - 1.0

    def bias_oracle(self, config: ExperimentConfig, signal: Optional[SignalBundle] = None) -> BiasOracle:
        """b_k from an independent oracle run on the oracle stream, never from the batch itself"""
        if signal is None:
            A, _, clustering, _ = self.signal_factors(config)
        else:
            A, clustering = signal.A, signal.clustering
        model = NoiseModel(config.m, config.n, config.tau, config.master_seed)
        return bias_oracle_mc(
            A, model, config.cluster_index, config.oracle_replicates, self.threads, clustering
        )

    @log_operation("MonteCarloExperimentService")
    def run_replicates(
        self,
        config: ExperimentConfig,
        signal: Optional[SignalBundle] = None,
        oracle: Optional[BiasOracle] = None,
    ) -> ReplicateBatch:
        """R records, record i a pure function of (config, i), collected in index order.

        ``oracle`` may carry a bias_oracle result already computed for this config.
        """
        signal = signal or self.build_signal(config)
        context, probe_labels, form_labels = self._context(config, signal)

        def run(index: int) -> Tuple[ReplicateRecord, DenseMatrix]:
            return self._replicate(context, index)

        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                results = list(executor.map(run, range(config.replicates)))
        else:
            results = [run(i) for i in range(config.replicates)]

        batch = ReplicateBatch(
            records=[r for r, _ in results],
            probe_labels=probe_labels,
            form_labels=form_labels,
            bases=[b for _, b in results],
        )

        if context.theta is not None:
            batch.b_hat = (oracle or self.bias_oracle(config, signal)).b_hat
            self._pair_and_rescale(batch, context, batch.b_hat)

        logger.info(
            "Replicates completed",
            m=config.m, n=config.n, replicates=config.replicates, threads=self.threads,
            in_regime=sum(r.in_regime for r in batch.records), b_hat=batch.b_hat
        )
        return batch

    # Aggregation

    def _bias_summary(
        self, batch: ReplicateBatch, config: ExperimentConfig, projectors: ProjectorSet, gap: float
    ) -> BiasSummary:
        cluster = projectors.cluster(config.cluster_index)
        R = len(batch.bases)
        stacked = np.hstack(batch.bases)
        mean_projector = stacked @ stacked.T / R
        decomposition = bias_decomposition(mean_projector, cluster)

        # batch-means standard error of the deviation norm
        batch_count = max(2, min(settings.monte_carlo.fit_batches, R))
        batch_norms = []
        width = cluster.multiplicity
        for chunk in np.array_split(np.arange(R), batch_count):
            columns = stacked[:, chunk[0] * width:(chunk[-1] + 1) * width]
            batch_norms.append(operator_norm(columns @ columns.T / chunk.size - cluster.projector))
        deviation_se = float(np.std(batch_norms, ddof=1) / math.sqrt(batch_count))

        big = max(config.m, config.n)
        if config.tau > 0:
            remainder_ratio = decomposition.remainder_norm / (config.tau ** 2 * math.sqrt(big) / gap ** 2)
            deviation_ratio = decomposition.deviation_norm / (config.tau ** 2 * big / gap ** 2)
        else:
            remainder_ratio = deviation_ratio = 0.0
        return BiasSummary(
            deviation_norm=decomposition.deviation_norm,
            deviation_std_error=deviation_se,
            remainder_norm=decomposition.remainder_norm,
            remainder_ratio=remainder_ratio,
            deviation_ratio=deviation_ratio,
            remainder_to_deviation=(
                decomposition.remainder_norm / decomposition.deviation_norm
                if decomposition.deviation_norm > 0 else 0.0
            ),
            b_from_mean=decomposition.b_k,
        )

    @staticmethod
    def _debias_summary(batch: ReplicateBatch, b_hat: float) -> Optional[DebiasSummary]:
        paired = [r for r in batch.records if r.b_tilde is not None]
        if not paired:
            return None
        firsts = [r for r in paired if r.index % 2 == 0]
        b_tilde = np.array([r.b_tilde for r in firsts])
        naive = np.array([r.naive_alignment_error for r in paired])
        debiased = np.array([r.debiased_alignment_error for r in paired])

        def se(values: np.ndarray) -> float:
            return float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0

        return DebiasSummary(
            pairs=len(firsts),
            mean_b_tilde=float(np.mean(b_tilde)),
            b_tilde_std_error=se(b_tilde),
            b_hat=b_hat,
            mean_naive_alignment_error=float(np.mean(naive)),
            mean_debiased_alignment_error=float(np.mean(debiased)),
            naive_std_error=se(naive),
            debiased_std_error=se(debiased),
            floor_active_fraction=float(np.mean([bool(r.floor_active) for r in firsts])),
        )

    @log_operation("MonteCarloExperimentService")
    def summarize(self, batch: ReplicateBatch, config: ExperimentConfig) -> SummaryReport:
        """Deterministic index-order aggregation of a batch into a SummaryReport"""
        records = batch.records
        R = len(records)
        if R < MIN_SUMMARY_RECORDS:
            raise InsufficientReplicatesError(
                f"summarize needs at least {MIN_SUMMARY_RECORDS} records", {"records": R}
            )
        _, _, clustering, projectors = self.signal_factors(config)
        gap = clustering.gap(config.cluster_index)
        levels = quantile_levels(config.t_values)
        tau = config.tau
        big = max(config.m, config.n)

        quantities: Dict[str, QuantityStats] = {}
        for name in RECORD_QUANTITIES:
            values = np.array([getattr(r, name) for r in records if getattr(r, name) is not None], dtype=np.float64)
            if values.size:
                quantities[name] = _quantity_stats(values, levels)

        fluctuations: List[ProbeFluctuation] = []
        fluctuation_constant = 0.0
        forms = np.array([r.bilinear for r in records], dtype=np.float64).reshape(R, len(batch.probe_labels))
        for j, label in enumerate(batch.probe_labels):
            column = forms[:, j]
            mean_form = float(np.mean(column))
            spread = np.abs(column - mean_form)
            quantiles = {key: float(np.quantile(spread, p)) for key, p in levels.items()}
            normalized = {}
            for t, (key, q) in zip(config.t_values, quantiles.items()):
                if tau > 0:
                    unit = tau * math.sqrt(t) / gap
                    normalized[key] = q / unit
                    bound = unit * (tau * (math.sqrt(big) + math.sqrt(t)) / gap + 1.0)
                    fluctuation_constant = max(fluctuation_constant, q / bound)
                else:
                    normalized[key] = 0.0
            fluctuations.append(ProbeFluctuation(
                label=label,
                mean_form=mean_form,
                median_abs_fluctuation=float(np.median(spread)),
                quantiles=quantiles,
                normalized_quantiles=normalized,
            ))

        mean_norm = float(np.mean([r.norm_gamma for r in records]))
        thresholds = {
            key: deviation_threshold(mean_norm, tau, t, config.c2)
            for t, key in zip(config.t_values, levels)
        }

        # records parsed back from CSV carry no b_hat; the oracle stream reproduces it
        b_hat = batch.b_hat
        if b_hat is None and any(r.b_tilde is not None for r in records):
            b_hat = self.bias_oracle(config).b_hat

        linf_values = [r.linf_error for r in records if r.linf_error is not None]
        linf_median = (
            float(np.median(linf_values)) / math.sqrt(math.log(config.m + config.n) / big)
            if linf_values else None
        )

        report = SummaryReport(
            version=settings.version_string,
            config=config,
            replicates=R,
            max_dim=big,
            gap=gap,
            in_regime_fraction=float(np.mean([r.in_regime for r in records])),
            localized_fraction=float(np.mean([r.cluster_localized for r in records])),
            weyl_violations=sum(not r.weyl_ok for r in records),
            projector_bound_violations=sum(not r.projector_bound_ok for r in records),
            remainder_bound_violations=sum(not r.remainder_bound_ok for r in records),
            quantities=quantities,
            fluctuations=fluctuations,
            fluctuation_constant=fluctuation_constant,
            deviation_thresholds=thresholds,
            surrogate_scale=1.0 / math.sqrt(R),
            linf_normalized_median=linf_median,
            bias=self._bias_summary(batch, config, projectors, gap) if batch.bases else None,
            debias=self._debias_summary(batch, b_hat) if b_hat is not None else None,
        )
        logger.info(
            "Summarized replicates",
            replicates=R, in_regime_fraction=report.in_regime_fraction,
            fluctuation_constant=fluctuation_constant
        )
        return report

    # Sweeps

    @staticmethod
    def sweep_quantity(report: SummaryReport, name: str) -> Optional[float]:
        if name == "median_fluctuation":
            return report.fluctuations[0].median_abs_fluctuation if report.fluctuations else None
        if name == "linf_normalized_median":
            return report.linf_normalized_median
        if report.bias is None:
            return None
        return getattr(report.bias, name)

    @log_operation("MonteCarloExperimentService")
    def run_sweep(self, config: ExperimentConfig, out_dir: Optional[Path] = None) -> SweepReport:
        """Summaries at every size_sweep point and log-log slopes against m v n"""
        if not config.size_sweep:
            raise ConfigurationError("run_sweep needs a size_sweep in the configuration")

        summaries: List[SummaryReport] = []
        for point in config.size_sweep:
            point_config = config.at_size(point)
            batch = self.run_replicates(point_config)
            summaries.append(self.summarize(batch, point_config))
            if out_dir is not None:
                self.artifact_store.write_records(
                    Path(out_dir) / f"records_{point.m}x{point.n}.csv", batch, point_config
                )

        sizes = [s.max_dim for s in summaries]
        fits: List[ScalingFit] = []
        for name in SWEEP_QUANTITIES:
            values = [self.sweep_quantity(s, name) for s in summaries]
            if any(v is None for v in values):
                continue
            try:
                fits.append(scaling_fit(name, sizes, values))
            except DegenerateFitError as e:
                logger.warning("Skipping scaling fit", quantity=name, reason=e.message)
        return SweepReport(version=settings.version_string, summaries=summaries, fits=fits)

    # Output

    def emit(self, batch: ReplicateBatch, report: SummaryReport, out_dir: Path) -> Dict[str, Path]:
        """records.csv and summary.json under out_dir"""
        out_dir = Path(out_dir)
        return {
            "records": self.artifact_store.write_records(out_dir / "records.csv", batch, report.config),
            "summary": self.artifact_store.write_json(out_dir / "summary.json", report),
        }

    @log_operation("MonteCarloExperimentService")
    def simulate(self, config: ExperimentConfig, out_dir: Path) -> Dict[str, Path]:
        """Full run: signal, replicates, summary, projector set, and the sweep when configured"""
        out_dir = Path(out_dir)
        signal = self.build_signal(config)
        batch = self.run_replicates(config, signal)
        paths = self.emit(batch, self.summarize(batch, config), out_dir)
        paths["projectors"] = self.artifact_store.save_projector_set(out_dir / "projectors", signal.projectors)
        if config.size_sweep:
            sweep = self.run_sweep(config, out_dir)
            paths["sweep"] = self.artifact_store.write_json(out_dir / "sweep.json", sweep)
        return paths

    @log_operation("MonteCarloExperimentService")
    def report_from_records(self, records_path: Path, out_path: Path) -> SummaryReport:
        """Summary of a previously written records file"""
        config, batch = self.artifact_store.parse_records(records_path)
        report = self.summarize(batch, config)
        self.artifact_store.write_json(out_path, report)
        return report
