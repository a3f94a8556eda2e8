"""
Dense matrix primitives and symmetric eigendecomposition

Every other service goes through these functions for eigenpairs, SVDs and
operator norms. Outputs follow one sign convention: the first component of
each eigenvector (left singular vector for SVDs) whose magnitude exceeds
``sign_zero_tol`` is made positive, so identical inputs give identical
outputs.
"""
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from config.logging import get_logger
from config.settings import settings

from ..models.data_models import DenseMatrix, EigenDecomposition, SvdDecomposition, Vector
from ..models.exceptions import DimensionMismatchError, NonFiniteError, NonSymmetricError

logger = get_logger("linalg")


def as_matrix(A, name: str = "matrix") -> DenseMatrix:
    """Coerce to a finite 2-D float64 array"""
    matrix = np.asarray(A, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionMismatchError(
            f"{name} must be two-dimensional", {"ndim": int(matrix.ndim)}
        )
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries", {"shape": list(matrix.shape)})
    return matrix


def as_vector(x, name: str = "vector") -> Vector:
    """Coerce to a finite 1-D float64 array"""
    vector = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(vector)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries", {"length": int(vector.size)})
    return vector


def asymmetry(S: DenseMatrix) -> float:
    return float(np.max(np.abs(S - S.T))) if S.size else 0.0


def check_symmetric(S: DenseMatrix, tol: Optional[float] = None) -> DenseMatrix:
    """Validate that S is square and symmetric to a relative tolerance"""
    matrix = as_matrix(S, "symmetric matrix")
    if matrix.shape[0] != matrix.shape[1]:
        raise NonSymmetricError("Matrix is not square", {"shape": list(matrix.shape)})
    tol = settings.numerics.symmetry_tol if tol is None else tol
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    defect = asymmetry(matrix)
    if defect > tol * scale:
        raise NonSymmetricError(
            "Matrix is not symmetric within tolerance",
            {"asymmetry": defect, "tolerance": tol * scale}
        )
    return matrix


def normalize_signs(vectors: DenseMatrix, zero_tol: Optional[float] = None) -> Tuple[DenseMatrix, Vector]:
    """Flip columns so their first non-negligible component is positive.

    Returns the normalized columns and the +-1 factors applied.
    """
    zero_tol = settings.numerics.sign_zero_tol if zero_tol is None else zero_tol
    signs = np.ones(vectors.shape[1])
    for j in range(vectors.shape[1]):
        column = vectors[:, j]
        nonzero = np.flatnonzero(np.abs(column) > zero_tol)
        if nonzero.size and column[nonzero[0]] < 0:
            signs[j] = -1.0
    return vectors * signs, signs


def jacobi_eig(S: DenseMatrix, max_sweeps: Optional[int] = None) -> Tuple[Vector, DenseMatrix]:
    """Cyclic Jacobi eigenvalue iteration; returns unsorted (eigenvalues, eigenvectors)"""
    A = np.array(S, dtype=np.float64, copy=True)
    size = A.shape[0]
    V = np.eye(size)
    max_sweeps = settings.numerics.jacobi_max_sweeps if max_sweeps is None else max_sweeps
    threshold = 10.0 * np.finfo(np.float64).eps * max(np.linalg.norm(A), np.finfo(np.float64).tiny)

    for sweep in range(max_sweeps):
        rotated = False
        for p in range(size - 1):
            for q in range(p + 1, size):
                apq = A[p, q]
                if abs(apq) <= threshold:
                    continue
                rotated = True
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0

                vec_p = V[:, p].copy()
                vec_q = V[:, q].copy()
                V[:, p] = c * vec_p - s * vec_q
                V[:, q] = s * vec_p + c * vec_q
        if not rotated:
            break
    else:
        logger.warning("Jacobi iteration hit the sweep limit", size=size, sweeps=max_sweeps)

    return np.diag(A).copy(), V


def sym_eig(
    S: DenseMatrix,
    subset: Optional[Tuple[int, int]] = None,
    method: Optional[str] = None,
) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix with non-increasing eigenvalues.

    Args:
        S: square symmetric matrix
        subset: optional inclusive (first, last) positions in the
            non-increasing order; only those eigenpairs are returned
        method: "lapack" (default from settings) or "jacobi"

    Raises:
        NonSymmetricError, NonFiniteError
    """
    matrix = check_symmetric(S)
    size = matrix.shape[0]
    method = (method or settings.numerics.eigen_method).lower()

    if subset is not None:
        first, last = subset
        if not 0 <= first <= last < size:
            raise DimensionMismatchError(
                "Eigenpair subset outside the spectrum", {"subset": [first, last], "size": size}
            )

    if method == "jacobi":
        values, vectors = jacobi_eig(matrix)
        order = np.argsort(-values, kind="stable")
        values, vectors = values[order], vectors[:, order]
        if subset is not None:
            values = values[subset[0]:subset[1] + 1]
            vectors = vectors[:, subset[0]:subset[1] + 1]
    else:
        if subset is None:
            values, vectors = scipy.linalg.eigh(matrix)
        else:
            # ascending positions of the requested descending window
            values, vectors = scipy.linalg.eigh(
                matrix, subset_by_index=[size - 1 - subset[1], size - 1 - subset[0]]
            )
        values, vectors = values[::-1].copy(), vectors[:, ::-1].copy()

    vectors, _ = normalize_signs(vectors)
    return EigenDecomposition(eigenvalues=values, eigenvectors=vectors)


def svd(A: DenseMatrix) -> SvdDecomposition:
    """Thin SVD with non-increasing singular values and paired sign normalization"""
    matrix = as_matrix(A, "matrix")
    left, values, right_t = scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesdd")
    left, signs = normalize_signs(left)
    right = right_t.T * signs
    return SvdDecomposition(singular_values=values, left_vectors=left, right_vectors=right)


def singular_values(A: DenseMatrix) -> Vector:
    return scipy.linalg.svdvals(as_matrix(A, "matrix"))


def operator_norm(A: DenseMatrix) -> float:
    """Largest singular value"""
    matrix = as_matrix(A, "matrix")
    if matrix.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(matrix)[0])


def restricted_operator_norm(M: DenseMatrix, spanning: DenseMatrix) -> float:
    """Operator norm of a symmetric M whose range lies in span(spanning).

    Exact under that assumption, at the cost of a small dense problem on an
    orthonormal basis of the span.
    """
    basis, _ = scipy.linalg.qr(spanning, mode="economic")
    return operator_norm(basis.T @ M @ basis)


def orthonormality_defect(Q: DenseMatrix) -> float:
    """max |Q^T Q - I|"""
    matrix = np.asarray(Q, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(-1, 1)
    gram = matrix.T @ matrix
    return float(np.max(np.abs(gram - np.eye(gram.shape[0])))) if gram.size else 0.0


def eigen_reconstruction_error(S: DenseMatrix, decomposition: EigenDecomposition) -> float:
    Q = decomposition.eigenvectors
    rebuilt = (Q * decomposition.eigenvalues) @ Q.T
    return float(np.max(np.abs(S - rebuilt)))


def random_orthonormal(rows: int, cols: int, rng: np.random.Generator) -> DenseMatrix:
    """Haar-distributed orthonormal columns via QR of a Gaussian matrix"""
    gaussian = rng.standard_normal((rows, cols))
    Q, R = np.linalg.qr(gaussian)
    return Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
