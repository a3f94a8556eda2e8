"""
Core data models for svperturb

Matrices are carried as ``numpy`` float64 arrays (``DenseMatrix``); the
dataclasses here group them into the decompositions, projector families and
Monte Carlo rows the services exchange.
"""
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from .exceptions import ConfigurationError, IndexOutOfRangeError

DenseMatrix = npt.NDArray[np.float64]
Vector = npt.NDArray[np.float64]


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues non-increasing"""
    eigenvalues: Vector
    eigenvectors: DenseMatrix

    @property
    def size(self) -> int:
        return int(self.eigenvalues.shape[0])


@dataclass(frozen=True)
class SvdDecomposition:
    """Thin SVD with non-increasing singular values"""
    singular_values: Vector
    left_vectors: DenseMatrix
    right_vectors: DenseMatrix

    @property
    def shape(self) -> Tuple[int, int]:
        return int(self.left_vectors.shape[0]), int(self.right_vectors.shape[0])


@dataclass(frozen=True)
class SpectrumClustering:
    """Distinct singular values with index sets, multiplicities and eigengaps"""
    distinct_values: Vector
    index_sets: List[List[int]]  # 1-based singular value indices
    multiplicities: List[int]
    zero_multiplicity: int
    gaps: Vector
    m: int
    n: int

    @property
    def cluster_count(self) -> int:
        return len(self.multiplicities)

    @property
    def rank(self) -> int:
        return sum(self.multiplicities)

    def check_index(self, k: int) -> None:
        if not 1 <= k <= self.cluster_count:
            raise IndexOutOfRangeError(
                f"Cluster index {k} outside 1..{self.cluster_count}",
                {"k": k, "clusters": self.cluster_count}
            )

    def mu(self, k: int) -> float:
        self.check_index(k)
        return float(self.distinct_values[k - 1])

    def gap(self, k: int) -> float:
        self.check_index(k)
        return float(self.gaps[k - 1])

    def delta(self, k: int) -> List[int]:
        self.check_index(k)
        return list(self.index_sets[k - 1])


@dataclass(frozen=True)
class ClusterProjector:
    """Spectral data of one cluster k: singular vector bases and derived projectors"""
    k: int
    mu: float
    gap: float
    left: DenseMatrix   # m x nu_k, columns u_i for i in Delta_k
    right: DenseMatrix  # n x nu_k, columns v_i for i in Delta_k

    @property
    def multiplicity(self) -> int:
        return int(self.left.shape[1])

    @cached_property
    def theta(self) -> DenseMatrix:
        """Eigenvectors theta_i = (u_i, v_i)/sqrt(2) of the dilation"""
        return np.vstack([self.left, self.right]) / math.sqrt(2.0)

    @cached_property
    def theta_negative(self) -> DenseMatrix:
        """Eigenvectors theta_{-i} = (u_i, -v_i)/sqrt(2)"""
        return np.vstack([self.left, -self.right]) / math.sqrt(2.0)

    @cached_property
    def block_uu(self) -> DenseMatrix:
        return self.left @ self.left.T

    @cached_property
    def block_uv(self) -> DenseMatrix:
        return self.left @ self.right.T

    @property
    def block_vu(self) -> DenseMatrix:
        return self.block_uv.T

    @cached_property
    def block_vv(self) -> DenseMatrix:
        return self.right @ self.right.T

    @cached_property
    def projector(self) -> DenseMatrix:
        """P_k = 1/2 [[P^uu, P^uv], [P^vu, P^vv]]"""
        return 0.5 * np.block([[self.block_uu, self.block_uv],
                               [self.block_vu, self.block_vv]])

    @cached_property
    def negative_projector(self) -> DenseMatrix:
        """P_{-k} = 1/2 [[P^uu, -P^uv], [-P^vu, P^vv]]"""
        return 0.5 * np.block([[self.block_uu, -self.block_uv],
                               [-self.block_vu, self.block_vv]])


@dataclass(frozen=True)
class ProjectorSet:
    """Cluster projectors of the dilation, P_0 and the resolvent sums C_k"""
    m: int
    n: int
    clusters: List[ClusterProjector]
    zero_multiplicity: int
    _resolvent_cache: Dict[int, DenseMatrix] = field(
        default_factory=dict, repr=False, compare=False
    )

    @property
    def size(self) -> int:
        return self.m + self.n

    @property
    def cluster_count(self) -> int:
        return len(self.clusters)

    def cluster(self, k: int) -> ClusterProjector:
        if not 1 <= k <= self.cluster_count:
            raise IndexOutOfRangeError(
                f"Cluster index {k} outside 1..{self.cluster_count}",
                {"k": k, "clusters": self.cluster_count}
            )
        return self.clusters[k - 1]

    @cached_property
    def zero_projector(self) -> DenseMatrix:
        """P_0 = I - sum over +-k of P_k; the zero matrix when nu_0 = 0"""
        if self.zero_multiplicity == 0:
            return np.zeros((self.size, self.size))
        total = np.eye(self.size)
        for cluster in self.clusters:
            total -= cluster.projector + cluster.negative_projector
        return 0.5 * (total + total.T)

    def projector(self, s: int) -> DenseMatrix:
        """P_s for s in {-d, ..., -1, 0, 1, ..., d}"""
        if s == 0:
            return self.zero_projector
        cluster = self.cluster(abs(s))
        return cluster.projector if s > 0 else cluster.negative_projector

    def eigenvalue(self, s: int) -> float:
        """mu_s with mu_{-s} = -mu_s and mu_0 = 0"""
        if s == 0:
            return 0.0
        mu = self.cluster(abs(s)).mu
        return mu if s > 0 else -mu

    def signed_indices(self) -> List[int]:
        d = self.cluster_count
        indices = list(range(1, d + 1)) + list(range(-1, -d - 1, -1))
        if self.zero_multiplicity > 0:
            indices.append(0)
        return indices

    def regime_holds(self, k: int, mean_norm: float, gamma: float) -> bool:
        """Regime condition E||X|| <= (1 - gamma) g_k / 2"""
        return mean_norm <= (1.0 - gamma) * self.cluster(k).gap / 2.0


@dataclass(frozen=True)
class EmpiricalProjector:
    """P~_k assembled from the eigenvectors of B~ at the positions Delta_k"""
    k: int
    m: int
    n: int
    basis: DenseMatrix        # (m+n) x nu_k orthonormal eigenvectors theta~_i
    eigenvalues: Vector       # sigma~_i, i in Delta_k
    P_tilde: DenseMatrix

    @property
    def multiplicity(self) -> int:
        return int(self.basis.shape[1])

    @property
    def blocks_uu(self) -> DenseMatrix:
        return 2.0 * self.P_tilde[:self.m, :self.m]

    @property
    def blocks_uv(self) -> DenseMatrix:
        return 2.0 * self.P_tilde[:self.m, self.m:]

    @property
    def blocks_vu(self) -> DenseMatrix:
        return 2.0 * self.P_tilde[self.m:, :self.m]

    @property
    def blocks_vv(self) -> DenseMatrix:
        return 2.0 * self.P_tilde[self.m:, self.m:]

    def reassemble(self) -> DenseMatrix:
        return 0.5 * np.block([[self.blocks_uu, self.blocks_uv],
                               [self.blocks_vu, self.blocks_vv]])


@dataclass(frozen=True)
class PerturbationSplit:
    """P~_k - P_k = L_k(Gamma) + S_k(Gamma) together with the norms the bounds use"""
    L: DenseMatrix
    S: DenseMatrix
    norm_gamma: float
    gap: float
    in_regime: bool
    projector_deviation_norm: float
    linear_norm: float
    remainder_norm: float

    @property
    def relative_noise(self) -> float:
        return self.norm_gamma / self.gap

    @property
    def projector_bound(self) -> float:
        return 4.0 * self.relative_noise

    @property
    def remainder_bound(self) -> float:
        return 14.0 * self.relative_noise ** 2


@dataclass(frozen=True)
class SpectralDeviation:
    """Sorted eigenvalue shifts between B and B~ compared against ||B~ - B||"""
    shifts: Vector
    max_shift: float
    gamma_norm: float

    def satisfies_weyl(self, tol: float = 1e-9) -> bool:
        return self.max_shift <= self.gamma_norm + tol


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian noise law X_ij ~ N(0, tau^2) with a master seed"""
    m: int
    n: int
    tau: float
    master_seed: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ConfigurationError(
                "Noise dimensions must be positive", {"m": self.m, "n": self.n}
            )
        # tau = 0 is admitted so that zero-noise sanity runs share the same code path
        if not math.isfinite(self.tau) or self.tau < 0:
            raise ConfigurationError("tau must be finite and non-negative", {"tau": self.tau})
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigurationError(
                "master_seed must be a 64-bit unsigned integer", {"seed": self.master_seed}
            )

    @property
    def scale(self) -> float:
        """tau * sqrt(m v n)"""
        return self.tau * math.sqrt(max(self.m, self.n))


@dataclass(frozen=True)
class NormStats:
    """Monte Carlo summary of the operator norm ||X||"""
    m: int
    n: int
    tau: float
    seed: int
    replicates: int
    mean_norm: float
    std_norm: float
    min_norm: float
    max_norm: float
    normalized_mean: float
    gordon_ratio: float
    deviation_fraction: float
    quantiles: Dict[float, float]
    moment_ratios: Dict[int, float]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "m": self.m,
            "n": self.n,
            "tau": self.tau,
            "seed": self.seed,
            "replicates": self.replicates,
            "mean_norm": self.mean_norm,
            "std_norm": self.std_norm,
            "normalized_mean": self.normalized_mean,
            "quantiles": {str(p): v for p, v in self.quantiles.items()},
            "min_norm": self.min_norm,
            "max_norm": self.max_norm,
            "gordon_ratio": self.gordon_ratio,
            "deviation_fraction": self.deviation_fraction,
            "moment_ratios": {str(p): v for p, v in self.moment_ratios.items()},
        }


@dataclass(frozen=True)
class AlignedEigenvector:
    """Unit vector with its sign fixed against a reference"""
    vector: Vector
    reference_overlap: float


@dataclass(frozen=True)
class BiasEstimate:
    """Two-sample estimate b~_k and the debiasing floor state"""
    b_tilde: float
    gamma: float
    floor_active: bool

    @property
    def divisor(self) -> float:
        return max(math.sqrt(1.0 + self.b_tilde), math.sqrt(self.gamma) / 2.0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "b_tilde": self.b_tilde,
            "gamma": self.gamma,
            "floor_active": self.floor_active,
            "divisor": self.divisor,
        }


@dataclass(frozen=True)
class BiasOracle:
    """Monte Carlo estimate of b_k = E<theta~, theta>^2 - 1"""
    b_hat: float
    std_error: float
    replicates: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "b_hat": self.b_hat,
            "std_error": self.std_error,
            "replicates": self.replicates,
        }


@dataclass(frozen=True)
class BiasDecomposition:
    """Empirical split of E P~_k - P_k into P_k(.)P_k and the remainder T_k"""
    deviation: DenseMatrix
    low_rank_part: DenseMatrix
    remainder: DenseMatrix
    deviation_norm: float
    remainder_norm: float
    b_k: Optional[float] = None


@dataclass(frozen=True)
class ProbePair:
    """Pair (x, y) of probe vectors for bilinear forms <P x, y>"""
    label: str
    x: Vector
    y: Vector


@dataclass(frozen=True)
class RegimeCheck:
    """Estimated E||X|| compared against (1 - gamma) g_k / 2"""
    mean_norm_estimate: float
    threshold: float
    holds: bool


@dataclass(frozen=True)
class SignalBundle:
    """Signal matrix A with its SVD, clustering and projectors"""
    A: DenseMatrix
    svd: SvdDecomposition
    clustering: SpectrumClustering
    projectors: ProjectorSet
    regime: RegimeCheck


@dataclass
class ReplicateRecord:
    """Measurements of one Monte Carlo replicate"""
    index: int
    norm_gamma: float
    in_regime: bool
    cluster_localized: bool
    max_shift: float
    weyl_ok: bool
    projector_deviation: float
    linear_norm: float
    remainder_norm: float
    projector_bound_ok: bool
    remainder_bound_ok: bool
    bilinear: List[float] = field(default_factory=list)
    linear_forms: List[float] = field(default_factory=list)
    overlap: Optional[float] = None
    b_tilde: Optional[float] = None
    floor_active: Optional[bool] = None
    naive_alignment_error: Optional[float] = None
    debiased_alignment_error: Optional[float] = None
    rho: Optional[float] = None
    linf_error: Optional[float] = None
    linf_u: Optional[float] = None
    linf_v: Optional[float] = None


@dataclass
class ReplicateBatch:
    """Records of a run plus the in-memory cluster bases used for pooled means"""
    records: List[ReplicateRecord]
    probe_labels: List[str]
    form_labels: List[str]
    bases: Optional[List[DenseMatrix]] = None
    b_hat: Optional[float] = None


@dataclass(frozen=True)
class SuiteCheck:
    """One named acceptance check"""
    name: str
    observed: float
    limit: float
    passed: bool
    detail: str = ""


@dataclass
class SuiteResult:
    """Outcome of an acceptance suite"""
    suite: str
    checks: List[SuiteCheck] = field(default_factory=list)
    duration_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, observed: float, limit: float, passed: bool, detail: str = "") -> None:
        self.checks.append(SuiteCheck(name, float(observed), float(limit), bool(passed), detail))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "duration_s": self.duration_s,
            "checks": [
                {
                    "name": c.name,
                    "observed": c.observed,
                    "limit": c.limit,
                    "passed": c.passed,
                    "detail": c.detail,
                }
                for c in self.checks
            ],
        }
