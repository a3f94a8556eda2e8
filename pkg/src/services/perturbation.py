"""
Empirical cluster projectors and the split P~_k - P_k = L_k(Gamma) + S_k(Gamma)

B~ = B + Gamma is the dilation of the noisy matrix A + X. The empirical
projector P~_k is built from the eigenvectors of B~ at the sorted positions
Delta_k; L_k is the first order term -(C_k Gamma P_k + P_k Gamma C_k) and S_k
is whatever remains. With C_k = sum P_s / (mu_s - mu_k) the leading term of
P~_k - P_k carries the minus sign. When ||Gamma|| >= g_k/2 the eigenvalue cluster may split;
the projector keeps the rank-position definition and ``in_regime`` records
the condition.
"""
import math
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

from config.logging import get_logger

from ..models.data_models import (
    BiasDecomposition, ClusterProjector, DenseMatrix, EmpiricalProjector,
    PerturbationSplit, ProjectorSet, SpectralDeviation, SpectrumClustering,
    SvdDecomposition, Vector
)
from ..models.exceptions import DimensionMismatchError, IndexOutOfRangeError
from .dilation_spectral import resolvent_sum
from .linalg_core import (
    as_matrix, as_vector, check_symmetric, operator_norm, restricted_operator_norm, sym_eig
)

logger = get_logger("perturbation")


def _check_positions(delta_k: Sequence[int], available: int) -> List[int]:
    positions = sorted(int(i) for i in delta_k)
    if not positions or positions[0] < 1 or positions[-1] > available:
        raise IndexOutOfRangeError(
            "Cluster positions outside the available eigenvalues",
            {"delta": positions, "available": available}
        )
    return positions


def _projector_from_basis(basis: DenseMatrix) -> DenseMatrix:
    P = basis @ basis.T
    return 0.5 * (P + P.T)


def empirical_projector(B_tilde: DenseMatrix, delta_k: Sequence[int], m: int, k: int = 1) -> EmpiricalProjector:
    """P~_k from the eigenvectors of B~ at the 1-based non-increasing positions Delta_k"""
    matrix = check_symmetric(B_tilde)
    size = matrix.shape[0]
    if not 0 < m < size:
        raise DimensionMismatchError("Row count m outside the dilation size", {"m": m, "size": size})
    positions = _check_positions(delta_k, size)

    decomposition = sym_eig(matrix, subset=(positions[0] - 1, positions[-1] - 1))
    columns = [p - positions[0] for p in positions]
    basis = decomposition.eigenvectors[:, columns]
    return EmpiricalProjector(
        k=k,
        m=m,
        n=size - m,
        basis=basis,
        eigenvalues=decomposition.eigenvalues[columns],
        P_tilde=_projector_from_basis(basis),
    )


def empirical_projector_from_svd(
    svd_tilde: SvdDecomposition,
    delta_k: Sequence[int],
    m: int,
    n: int,
    k: int = 1,
) -> EmpiricalProjector:
    """P~_k assembled from theta~_i = (u~_i, v~_i)/sqrt(2) of the noisy SVD"""
    if svd_tilde.shape != (m, n):
        raise DimensionMismatchError(
            "SVD shape does not match (m, n)", {"svd": list(svd_tilde.shape), "expected": [m, n]}
        )
    positions = _check_positions(delta_k, svd_tilde.singular_values.size)
    columns = np.array(positions) - 1
    basis = np.vstack([svd_tilde.left_vectors[:, columns],
                       svd_tilde.right_vectors[:, columns]]) / math.sqrt(2.0)
    return EmpiricalProjector(
        k=k,
        m=m,
        n=n,
        basis=basis,
        eigenvalues=svd_tilde.singular_values[columns].copy(),
        P_tilde=_projector_from_basis(basis),
    )


def _check_square(Gamma: DenseMatrix, size: int) -> DenseMatrix:
    matrix = as_matrix(Gamma, "Gamma")
    if matrix.shape != (size, size):
        raise DimensionMismatchError(
            "Perturbation does not match the projector dimensions",
            {"shape": list(matrix.shape), "expected": [size, size]}
        )
    return matrix


def linear_term(Gamma: DenseMatrix, projset: ProjectorSet, k: int) -> DenseMatrix:
    """L_k(Gamma) = -(C_k Gamma P_k + P_k Gamma C_k), the first order part of P~_k - P_k"""
    matrix = _check_square(Gamma, projset.size)
    theta = projset.cluster(k).theta
    C = resolvent_sum(projset, k)
    left = (C @ (matrix @ theta)) @ theta.T
    right = theta @ ((theta.T @ matrix) @ C)
    return -(left + right)


def perturbation_split(
    B: DenseMatrix,
    Gamma: DenseMatrix,
    projset: ProjectorSet,
    clustering: SpectrumClustering,
    k: int,
    empirical: Optional[EmpiricalProjector] = None,
    gamma_norm: Optional[float] = None,
) -> PerturbationSplit:
    """Exact split with restricted-span operator norms of P~ - P, L and S.

    ``empirical`` and ``gamma_norm`` may be supplied when the caller already
    has them (the Monte Carlo loop gets both from SVDs).
    """
    matrix = as_matrix(B, "B")
    if matrix.shape != (projset.size, projset.size):
        raise DimensionMismatchError(
            "B does not match the projector set",
            {"shape": list(matrix.shape), "expected": [projset.size, projset.size]}
        )
    noise = _check_square(Gamma, projset.size)
    cluster = projset.cluster(k)

    if empirical is None:
        empirical = empirical_projector(matrix + noise, clustering.delta(k), projset.m, k)
    if gamma_norm is None:
        gamma_norm = operator_norm(noise)

    theta = cluster.theta
    C = resolvent_sum(projset, k)
    C_gamma_theta = C @ (noise @ theta)
    L = C_gamma_theta @ theta.T
    L = -(L + L.T)
    deviation = empirical.P_tilde - cluster.projector
    S = deviation - L

    spanning = np.hstack([empirical.basis, theta, C_gamma_theta])
    return PerturbationSplit(
        L=L,
        S=S,
        norm_gamma=float(gamma_norm),
        gap=cluster.gap,
        in_regime=bool(gamma_norm < cluster.gap / 2.0),
        projector_deviation_norm=restricted_operator_norm(deviation, np.hstack([empirical.basis, theta])),
        linear_norm=restricted_operator_norm(L, np.hstack([theta, C_gamma_theta])),
        remainder_norm=restricted_operator_norm(S, spanning),
    )


def spectral_deviation(reference: Vector, perturbed: Vector, gamma_norm: float) -> SpectralDeviation:
    """Weyl comparison of two non-increasing spectra of equal length"""
    reference = as_vector(reference)
    perturbed = as_vector(perturbed)
    if reference.size != perturbed.size:
        raise DimensionMismatchError(
            "Spectra differ in length", {"reference": int(reference.size), "perturbed": int(perturbed.size)}
        )
    shifts = np.abs(perturbed - reference)
    return SpectralDeviation(
        shifts=shifts,
        max_shift=float(np.max(shifts)) if shifts.size else 0.0,
        gamma_norm=float(gamma_norm),
    )


def weyl_deviation(B: DenseMatrix, B_tilde: DenseMatrix) -> SpectralDeviation:
    """Sorted eigenvalue shifts of B~ against B and ||B~ - B||"""
    reference = check_symmetric(B)
    perturbed = check_symmetric(B_tilde)
    if reference.shape != perturbed.shape:
        raise DimensionMismatchError(
            "B and B~ differ in size",
            {"B": list(reference.shape), "B_tilde": list(perturbed.shape)}
        )
    return spectral_deviation(
        scipy.linalg.eigvalsh(reference)[::-1],
        scipy.linalg.eigvalsh(perturbed)[::-1],
        operator_norm(perturbed - reference),
    )


def bilinear_form(M: DenseMatrix, x, y) -> float:
    """x^T M y"""
    matrix = as_matrix(M)
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if matrix.shape != (x.size, y.size):
        raise DimensionMismatchError(
            "Vector lengths do not match the matrix",
            {"shape": list(matrix.shape), "x": int(x.size), "y": int(y.size)}
        )
    return float(x @ matrix @ y)


def cluster_localized(singular_values_tilde: Vector, clustering: SpectrumClustering, k: int) -> bool:
    """Noisy values of Delta_k lie in (mu_k - g_k/2, mu_k + g_k/2) and all others outside.

    Negative and zero eigenvalues of B~ never reach the window since g_k <= mu_k.
    """
    values = as_vector(singular_values_tilde)
    delta = clustering.delta(k)
    if delta[-1] > values.size:
        raise IndexOutOfRangeError(
            "Cluster positions beyond the noisy spectrum", {"delta": delta, "available": int(values.size)}
        )
    mu = clustering.mu(k)
    half_gap = clustering.gap(k) / 2.0
    inside = np.abs(values - mu) < half_gap
    expected = np.zeros(values.size, dtype=bool)
    expected[np.array(delta) - 1] = True
    return bool(np.array_equal(inside, expected))


def bias_decomposition(mean_projector: DenseMatrix, cluster: ClusterProjector) -> BiasDecomposition:
    """Split E^P~_k - P_k into its low rank part P_k (.) P_k and the remainder T_k"""
    mean_projector = as_matrix(mean_projector, "mean projector")
    P = cluster.projector
    if mean_projector.shape != P.shape:
        raise DimensionMismatchError(
            "Mean projector does not match P_k",
            {"shape": list(mean_projector.shape), "expected": list(P.shape)}
        )
    deviation = mean_projector - P
    low_rank = P @ deviation @ P
    remainder = deviation - low_rank

    b_k = None
    if cluster.multiplicity == 1:
        theta = cluster.theta[:, 0]
        b_k = float(theta @ deviation @ theta)

    return BiasDecomposition(
        deviation=deviation,
        low_rank_part=low_rank,
        remainder=remainder,
        deviation_norm=operator_norm(deviation),
        remainder_norm=operator_norm(remainder),
        b_k=b_k,
    )
