"""
Dilation map, singular value clustering and cluster spectral projectors

For A of size m x n the dilation B = [[0, A], [A^T, 0]] has eigenvalues
+-sigma_i and a zero eigenvalue of multiplicity m + n - 2r. Clusters of equal
singular values give the projectors P_k, P_{-k}, the zero projector P_0 and
the resolvent sums C_k = sum_{s != k} P_s / (mu_s - mu_k).
"""
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dgecon

from config.logging import get_logger
from config.settings import settings

from ..models.data_models import (
    ClusterProjector, DenseMatrix, ProjectorSet, SpectrumClustering, SvdDecomposition, Vector
)
from ..models.exceptions import (
    ConfigurationError, DimensionMismatchError, EigenvalueOnContourError,
    EmptySpectrumError, NonUnitError
)
from .linalg_core import as_matrix, as_vector, check_symmetric

logger = get_logger("dilation")


def dilate(A: DenseMatrix) -> DenseMatrix:
    """Lambda(A) = [[0, A], [A^T, 0]]"""
    matrix = as_matrix(A, "A")
    m, n = matrix.shape
    B = np.zeros((m + n, m + n))
    B[:m, m:] = matrix
    B[m:, :m] = matrix.T
    return B


def theta_from_uv(u, v, sign: int = 1, tol: Optional[float] = None) -> Vector:
    """(u, sign * v) / sqrt(2) for unit u and v"""
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    tol = settings.numerics.unit_tol if tol is None else tol
    norms = (float(np.linalg.norm(u)), float(np.linalg.norm(v)))
    if abs(norms[0] - 1.0) > tol or abs(norms[1] - 1.0) > tol:
        raise NonUnitError(
            "Singular vectors must have unit norm", {"norm_u": norms[0], "norm_v": norms[1]}
        )
    if sign not in (1, -1):
        raise ConfigurationError("sign must be +1 or -1", {"sign": sign})
    return np.concatenate([u, sign * v]) / math.sqrt(2.0)


def split_theta(vector, m: int) -> Tuple[Vector, Vector]:
    """Inverse of theta_from_uv: (sqrt(2) x[:m], sqrt(2) x[m:])"""
    x = as_vector(vector)
    if not 0 < m < x.size:
        raise DimensionMismatchError("Split point outside the vector", {"m": m, "length": int(x.size)})
    return math.sqrt(2.0) * x[:m], math.sqrt(2.0) * x[m:]


def cluster_spectrum(
    singular_values: Sequence[float],
    m: int,
    n: int,
    rel_tol: Optional[float] = None,
) -> SpectrumClustering:
    """Group singular values into distinct values mu_k with eigengaps g_k.

    Values within rel_tol * sigma_1 of their neighbour merge transitively;
    values at or below rel_tol * sigma_1 count as zero. Inputs must be
    non-increasing up to that same tolerance.

    Raises:
        EmptySpectrumError: every value is zero
    """
    values = as_vector(singular_values, "singular values")
    rel_tol = settings.numerics.cluster_rel_tol if rel_tol is None else rel_tol
    if values.size > min(m, n):
        raise DimensionMismatchError(
            "More singular values than min(m, n)", {"count": int(values.size), "m": m, "n": n}
        )
    if np.any(values < 0):
        raise ConfigurationError("Singular values must be non-negative")

    top = float(np.max(values)) if values.size else 0.0
    if top <= 0.0:
        raise EmptySpectrumError("All singular values are zero", {"m": m, "n": n})
    tol = rel_tol * top
    if np.any(np.diff(values) > tol):
        raise ConfigurationError("Singular values must be non-increasing", {"tolerance": tol})

    clusters: List[List[int]] = []
    for i, value in enumerate(values):
        if value <= tol:
            continue
        if clusters and abs(values[clusters[-1][-1] - 1] - value) <= tol:
            clusters[-1].append(i + 1)
        else:
            clusters.append([i + 1])

    mu = np.array([float(np.mean(values[np.array(c) - 1])) for c in clusters])
    d = mu.size
    gaps = np.empty(d)
    if d == 1:
        gaps[0] = mu[0]
    else:
        for k in range(d):
            if k == 0:
                gaps[k] = mu[0] - mu[1]
            elif k == d - 1:
                gaps[k] = min(mu[k - 1] - mu[k], mu[k])
            else:
                gaps[k] = min(mu[k] - mu[k + 1], mu[k - 1] - mu[k])

    multiplicities = [len(c) for c in clusters]
    return SpectrumClustering(
        distinct_values=mu,
        index_sets=clusters,
        multiplicities=multiplicities,
        zero_multiplicity=m + n - 2 * sum(multiplicities),
        gaps=gaps,
        m=m,
        n=n,
    )


def build_projectors(svd: SvdDecomposition, clustering: SpectrumClustering) -> ProjectorSet:
    """Cluster projectors of Lambda(A) from its SVD factors"""
    m, n = svd.shape
    if (m, n) != (clustering.m, clustering.n):
        raise DimensionMismatchError(
            "Clustering dimensions do not match the SVD",
            {"svd": [m, n], "clustering": [clustering.m, clustering.n]}
        )
    available = svd.singular_values.size
    clusters = []
    for k, indices in enumerate(clustering.index_sets, start=1):
        if max(indices) > available:
            raise DimensionMismatchError(
                "Cluster index beyond the available singular vectors",
                {"k": k, "max_index": max(indices), "available": available}
            )
        columns = np.array(indices) - 1
        clusters.append(ClusterProjector(
            k=k,
            mu=float(clustering.distinct_values[k - 1]),
            gap=float(clustering.gaps[k - 1]),
            left=svd.left_vectors[:, columns].copy(),
            right=svd.right_vectors[:, columns].copy(),
        ))
    return ProjectorSet(m=m, n=n, clusters=clusters, zero_multiplicity=clustering.zero_multiplicity)


def resolvent_sum(projectors: ProjectorSet, k: int) -> DenseMatrix:
    """C_k = sum over s in {+-1..+-d, 0} minus {k} of P_s / (mu_s - mu_k)"""
    cached = projectors._resolvent_cache.get(k)
    if cached is not None:
        return cached

    mu_k = projectors.cluster(k).mu
    columns = []
    weights = []
    for cluster in projectors.clusters:
        if cluster.k != k:
            columns.append(cluster.theta)
            weights.append(np.full(cluster.multiplicity, 1.0 / (cluster.mu - mu_k)))
        columns.append(cluster.theta_negative)
        weights.append(np.full(cluster.multiplicity, 1.0 / (-cluster.mu - mu_k)))
    basis = np.hstack(columns)
    C = (basis * np.concatenate(weights)) @ basis.T
    if projectors.zero_multiplicity > 0:
        C -= projectors.zero_projector / mu_k
    C = 0.5 * (C + C.T)
    projectors._resolvent_cache[k] = C
    return C


def dilation_spectrum(singular_values: Sequence[float], m: int, n: int) -> Vector:
    """Non-increasing eigenvalues of Lambda(A) from the singular values of A"""
    sigma = np.sort(as_vector(singular_values))[::-1]
    if sigma.size > min(m, n):
        raise DimensionMismatchError("More singular values than min(m, n)")
    padded = np.concatenate([sigma, np.zeros(min(m, n) - sigma.size)])
    return np.concatenate([padded, np.zeros(abs(m - n)), -padded[::-1]])


def riesz_projector(
    B: DenseMatrix,
    center: float,
    radius: float,
    nodes: Optional[int] = None,
) -> DenseMatrix:
    """Spectral projector by trapezoidal quadrature of -(1/2 pi i) times the contour integral of (B - eta I)^{-1}.

    The circle |eta - center| = radius is sampled at ``nodes`` equispaced
    points; each complex resolvent solve is carried out as the real system
    [[B - aI, bI], [-bI, B - aI]] [X; Y] = [I; 0] for eta = a + ib.

    Raises:
        EigenvalueOnContourError: a node solve exceeds the condition limit
    """
    matrix = check_symmetric(B)
    nodes = settings.numerics.riesz_nodes if nodes is None else nodes
    if nodes < 16:
        raise ConfigurationError("Riesz quadrature needs at least 16 nodes", {"nodes": nodes})
    if radius <= 0:
        raise ConfigurationError("Contour radius must be positive", {"radius": radius})

    size = matrix.shape[0]
    identity = np.eye(size)
    rhs = np.vstack([identity, np.zeros((size, size))])
    max_condition = settings.numerics.riesz_max_condition
    total = np.zeros((size, size))

    for j in range(nodes):
        phi = 2.0 * math.pi * j / nodes
        a = center + radius * math.cos(phi)
        b = radius * math.sin(phi)
        shifted = matrix - a * identity
        system = np.block([[shifted, b * identity], [-b * identity, shifted]])

        lu, piv = scipy.linalg.lu_factor(system, check_finite=False)
        rcond, _ = dgecon(lu, np.linalg.norm(system, 1), norm="O")
        if rcond <= 0.0 or 1.0 / rcond > max_condition:
            raise EigenvalueOnContourError(
                "Resolvent is ill-conditioned on the contour",
                {"node": j, "eta": [a, b], "condition": math.inf if rcond <= 0 else 1.0 / rcond}
            )
        solution = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
        total += math.cos(phi) * solution[:size] - math.sin(phi) * solution[size:]

    projector = -(radius / nodes) * total
    return 0.5 * (projector + projector.T)
