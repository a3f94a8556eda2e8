"""
Sign alignment, bias parameter b_k and the two-sample debiased estimator

For a simple singular value sigma_{i_k} the empirical dilation eigenvector
theta~ shrinks towards the orthogonal complement of theta:
E<theta~, theta>^2 = 1 + b_k with b_k in [-1, 0]. Two independent
observations give b~ = <theta~1, theta~2> - 1, and
theta^ = theta~1 / max(sqrt(1 + b~), sqrt(gamma)/2) removes the shrinkage.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple, Union

import numpy as np

from config.logging import get_logger
from config.settings import settings

from ..models.data_models import (
    AlignedEigenvector, BiasEstimate, BiasOracle, DenseMatrix, EmpiricalProjector,
    NoiseModel, SpectrumClustering, Vector
)
from ..models.enums import NoiseStream
from ..models.exceptions import (
    ConfigurationError, DimensionMismatchError, IndexOutOfRangeError, InsufficientReplicatesError,
    MultiplicityNotOneError, NonUnitError
)
from ..utils.instrumentation import log_operation
from .dilation_spectral import cluster_spectrum, split_theta, theta_from_uv
from .linalg_core import as_matrix, as_vector, normalize_signs, svd
from .noise import sample_noise

logger = get_logger("estimator")


def _unit(x, name: str) -> Vector:
    vector = as_vector(x, name)
    norm = float(np.linalg.norm(vector))
    if abs(norm - 1.0) > settings.numerics.unit_tol:
        raise NonUnitError(f"{name} must have unit norm", {"norm": norm})
    return vector


def _check_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ConfigurationError("gamma must lie in (0, 1)", {"gamma": gamma})
    return float(gamma)


def align_sign(theta, reference) -> AlignedEigenvector:
    """theta or -theta, whichever has non-negative overlap with the reference.

    An exactly zero overlap falls back to the first-nonzero-positive rule.
    """
    theta = _unit(theta, "theta")
    reference = _unit(reference, "reference")
    if theta.size != reference.size:
        raise DimensionMismatchError(
            "theta and reference differ in length", {"theta": int(theta.size), "reference": int(reference.size)}
        )
    overlap = float(theta @ reference)
    if overlap < 0.0:
        theta, overlap = -theta, -overlap
    elif overlap == 0.0:
        normalized, _ = normalize_signs(theta.reshape(-1, 1))
        theta = normalized[:, 0]
    return AlignedEigenvector(vector=theta, reference_overlap=overlap)


def estimate_bias_two_sample(theta1, theta2, gamma: Optional[float] = None) -> BiasEstimate:
    """b~ = <theta~1, theta~2> - 1 with theta~2 aligned against theta~1"""
    gamma = _check_gamma(settings.monte_carlo.gamma if gamma is None else gamma)
    aligned = align_sign(theta2, theta1)
    b_tilde = min(0.0, max(-1.0, aligned.reference_overlap - 1.0))
    return BiasEstimate(
        b_tilde=b_tilde,
        gamma=gamma,
        floor_active=math.sqrt(1.0 + b_tilde) < math.sqrt(gamma) / 2.0,
    )


def debias(theta1, bias: BiasEstimate) -> Vector:
    """theta^ = theta~1 / max(sqrt(1 + b~), sqrt(gamma)/2)"""
    _check_gamma(bias.gamma)
    return as_vector(theta1, "theta1") / bias.divisor


def debias_pair(theta1, theta2, gamma: Optional[float] = None) -> Tuple[Vector, BiasEstimate]:
    """Two-sample estimator end to end: align, estimate b~, rescale theta~1"""
    estimate = estimate_bias_two_sample(theta1, theta2, gamma)
    return debias(theta1, estimate), estimate


def debias_singular_vectors(theta_hat, m: int) -> Tuple[Vector, Vector]:
    """Debiased (u^, v^) read off the dilation vector"""
    return split_theta(theta_hat, m)


def _simple_cluster_index(clustering: SpectrumClustering, k: int) -> int:
    delta = clustering.delta(k)
    if len(delta) != 1:
        raise MultiplicityNotOneError(
            "The estimator needs a cluster of multiplicity one",
            {"k": k, "multiplicity": len(delta)}
        )
    return delta[0]


@log_operation("estimator", "bias_oracle_mc")
def bias_oracle_mc(
    A: DenseMatrix,
    model: NoiseModel,
    k: int,
    replicates: int,
    threads: Optional[int] = None,
    clustering: Optional[SpectrumClustering] = None,
) -> BiasOracle:
    """Monte Carlo b^ = mean <theta~, theta>^2 - 1 on the oracle noise stream"""
    signal = as_matrix(A, "A")
    if signal.shape != (model.m, model.n):
        raise DimensionMismatchError(
            "A does not match the noise model", {"A": list(signal.shape), "model": [model.m, model.n]}
        )
    if replicates < 2:
        raise InsufficientReplicatesError("The oracle needs at least 2 replicates", {"replicates": replicates})

    decomposition = svd(signal)
    if clustering is None:
        clustering = cluster_spectrum(decomposition.singular_values, model.m, model.n)
    index = _simple_cluster_index(clustering, k) - 1

    if model.tau == 0.0:
        return BiasOracle(b_hat=0.0, std_error=0.0, replicates=replicates)

    u = decomposition.left_vectors[:, index]
    v = decomposition.right_vectors[:, index]

    def squared_overlap(r: int) -> float:
        noisy = svd(signal + sample_noise(model, r, NoiseStream.ORACLE))
        # <theta~, theta> = (<u~, u> + <v~, v>) / 2
        overlap = 0.5 * (noisy.left_vectors[:, index] @ u + noisy.right_vectors[:, index] @ v)
        return float(overlap) ** 2

    threads = threads or settings.monte_carlo.threads
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            values = np.fromiter(executor.map(squared_overlap, range(replicates)), dtype=np.float64)
    else:
        values = np.array([squared_overlap(r) for r in range(replicates)])

    oracle = BiasOracle(
        b_hat=float(np.mean(values) - 1.0),
        std_error=float(np.std(values, ddof=1) / math.sqrt(replicates)),
        replicates=replicates,
    )
    logger.info("Estimated bias oracle", k=k, replicates=replicates, b_hat=oracle.b_hat,
                std_error=oracle.std_error)
    return oracle


def rho_value(P_tilde_theta: Vector, P_theta: Vector, b_k: float, x: Vector) -> float:
    """<P~ theta - (1 + b_k) P theta, x> from precomputed images of theta"""
    return float((P_tilde_theta - (1.0 + b_k) * P_theta) @ x)


def rho_diagnostic(
    P_tilde: Union[EmpiricalProjector, DenseMatrix],
    P_k: DenseMatrix,
    b_k: float,
    theta,
    x,
) -> float:
    """rho_k(x) = <(P~_k - (1 + b_k) P_k) theta, x>"""
    theta = as_vector(theta, "theta")
    x = as_vector(x, "x")
    P_k = as_matrix(P_k, "P_k")
    if isinstance(P_tilde, EmpiricalProjector):
        P_tilde_theta = P_tilde.basis @ (P_tilde.basis.T @ theta)
    else:
        P_tilde_theta = as_matrix(P_tilde, "P_tilde") @ theta
    if P_k.shape != (theta.size, theta.size) or x.size != theta.size or P_tilde_theta.size != theta.size:
        raise DimensionMismatchError(
            "rho operands differ in size",
            {"P_k": list(P_k.shape), "theta": int(theta.size), "x": int(x.size)}
        )
    return rho_value(P_tilde_theta, P_k @ theta, b_k, x)


def linf_error(estimate, reference, scale: float) -> float:
    """||estimate - scale * reference||_inf"""
    estimate = as_vector(estimate, "estimate")
    reference = as_vector(reference, "reference")
    if estimate.size != reference.size:
        raise DimensionMismatchError(
            "estimate and reference differ in length",
            {"estimate": int(estimate.size), "reference": int(reference.size)}
        )
    return float(np.max(np.abs(estimate - scale * reference))) if estimate.size else 0.0


def _shrinkage(b: float) -> float:
    return math.sqrt(max(0.0, 1.0 + b))


def linear_form_deviation(theta_tilde, theta, b: float, x) -> float:
    """<theta~ - sqrt(1 + b) theta, x>"""
    theta_tilde = as_vector(theta_tilde, "theta_tilde")
    theta = as_vector(theta, "theta")
    x = as_vector(x, "x")
    if not theta_tilde.size == theta.size == x.size:
        raise DimensionMismatchError("Linear form operands differ in length")
    return float((theta_tilde - _shrinkage(b) * theta) @ x)


def singular_linf_errors(theta_tilde, theta, b: float, m: int) -> Tuple[float, float]:
    """l-inf errors of u~ - sqrt(1 + b) u and v~ - sqrt(1 + b) v"""
    u_tilde, v_tilde = split_theta(theta_tilde, m)
    u, v = split_theta(theta, m)
    scale = _shrinkage(b)
    return linf_error(u_tilde, u, scale), linf_error(v_tilde, v, scale)


@log_operation("estimator", "debias_observations")
def debias_observations(
    A1: DenseMatrix, A2: DenseMatrix, k: int, gamma: Optional[float] = None
) -> Tuple[Vector, BiasEstimate]:
    """Debiased dilation vector for the k-th singular pair of two independent observations"""
    first = as_matrix(A1, "A1")
    second = as_matrix(A2, "A2")
    if first.shape != second.shape:
        raise DimensionMismatchError(
            "Observations differ in shape", {"A1": list(first.shape), "A2": list(second.shape)}
        )
    m, n = first.shape
    if not 1 <= k <= min(m, n):
        raise IndexOutOfRangeError("k outside the singular spectrum", {"k": k, "rank_bound": min(m, n)})

    thetas = []
    for observation in (svd(first), svd(second)):
        thetas.append(theta_from_uv(observation.left_vectors[:, k - 1], observation.right_vectors[:, k - 1]))
    theta_hat, estimate = debias_pair(thetas[0], thetas[1], gamma)
    logger.info("Debiased observation pair", k=k, b_tilde=estimate.b_tilde, floor_active=estimate.floor_active)
    return theta_hat, estimate
