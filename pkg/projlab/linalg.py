"""Dense real linear algebra kernels.

Everything else in projlab is built on these functions: the SVD-based
pseudoinverse, orthonormal bases of ranges and nullspaces, and the
projector products that measure angles between subspaces.

All functions are pure. Subspaces are passed around as `SubspaceBasis`
values whose column signs and ordering are arbitrary, so every quantity
computed here depends on the spanned subspaces only.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from projlab.models.base import MinNormSolution, SubspaceBasis, SvdFactors

if TYPE_CHECKING:
    from projlab.models.types import CoeffVector, DenseMatrix

logger = logging.getLogger(__name__)


def as_matrix(M: DenseMatrix, name: str = "matrix") -> DenseMatrix:
    """Return `M` as a finite 2-D float array or raise `ValueError`."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_vector(v: CoeffVector, name: str = "vector") -> CoeffVector:
    """Return `v` as a finite 1-D float array or raise `ValueError`."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def default_rank_tol(rows: int, cols: int) -> float:
    """Machine epsilon times the larger dimension."""
    return float(np.finfo(float).eps * max(rows, cols, 1))


def svd_rank(
    singular_values: CoeffVector,
    rows: int,
    cols: int,
    rank_tol: float | None = None,
) -> int:
    """Numerical rank: singular values above `rank_tol * sigma_max`.

    Args:
        singular_values (CoeffVector): Non-increasing singular values.
        rows (int): Row count of the decomposed matrix.
        cols (int): Column count of the decomposed matrix.
        rank_tol (float | None): Relative threshold. Defaults to
            `eps * max(rows, cols)`.

    Returns:
        int: The number of singular values treated as nonzero.
    """
    if singular_values.size == 0 or singular_values[0] <= 0.0:
        return 0
    tol = default_rank_tol(rows, cols) if rank_tol is None else rank_tol
    if tol < 0:
        raise ValueError(f"rank_tol must be non-negative, got {tol}")
    return int(np.count_nonzero(singular_values > tol * singular_values[0]))


def svd(M: DenseMatrix, full_matrices: bool = False) -> SvdFactors:
    """Singular value decomposition `M = U diag(s) V^T`.

    Uses LAPACK `gesdd` and falls back to the slower but more robust
    `gesvd` driver when the divide-and-conquer iteration fails.

    Raises:
        ValueError: If `M` is not a finite matrix.
        numpy.linalg.LinAlgError: If neither driver converges.
    """
    M = as_matrix(M)
    rows, cols = M.shape
    if M.size == 0:
        k = min(rows, cols)
        left = np.eye(rows) if full_matrices else np.zeros((rows, k))
        right = np.eye(cols) if full_matrices else np.zeros((cols, k))
        return SvdFactors(left, np.zeros(0), right)

    try:
        U, s, Vh = scipy.linalg.svd(
            M, full_matrices=full_matrices, lapack_driver="gesdd", check_finite=False
        )
    except np.linalg.LinAlgError:
        logger.warning(f"gesdd did not converge for a {rows}x{cols} matrix, retrying")
        try:
            U, s, Vh = scipy.linalg.svd(
                M, full_matrices=full_matrices, lapack_driver="gesvd", check_finite=False
            )
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"SVD did not converge for a {rows}x{cols} matrix"
            ) from exc
    return SvdFactors(U, s, Vh.T)


def spectral_norm(M: DenseMatrix, dense_limit: int = 400) -> float:
    """Largest singular value `||M||_2`.

    Small matrices go through a full `svdvals`. When both dimensions
    exceed `dense_limit`, ARPACK computes only the leading triplet from a
    fixed start vector, so repeated runs give identical results.
    """
    M = as_matrix(M)
    if M.size == 0:
        return 0.0
    if min(M.shape) <= dense_limit:
        return float(scipy.linalg.svdvals(M, check_finite=False)[0])
    v0 = np.random.default_rng(0).standard_normal(min(M.shape))
    s = scipy.sparse.linalg.svds(M, k=1, v0=v0, solver="arpack", return_singular_vectors=False)
    return float(s[0])


def pseudo_inverse(M: DenseMatrix, rank_tol: float | None = None) -> DenseMatrix:
    """Moore-Penrose pseudoinverse `M^+` with the numerical rank cut-off."""
    M = as_matrix(M)
    rows, cols = M.shape
    U, s, V = svd(M)
    r = svd_rank(s, rows, cols, rank_tol)
    return (V[:, :r] / s[:r]) @ U[:, :r].T


def pseudo_inverse_apply(
    M: DenseMatrix,
    b: CoeffVector,
    rank_tol: float | None = None,
) -> MinNormSolution:
    """Minimum-norm least-squares solution of `M x = b`.

    Among all minimizers of `||M x - b||` the one of smallest norm is
    returned; it lies in `R(M^T)`. Singular values at or below
    `rank_tol * sigma_max` are treated as zero.

    Args:
        M (DenseMatrix): The system matrix.
        b (CoeffVector): Right-hand side, `len(b) == rows(M)`.
        rank_tol (float | None): Relative rank threshold.
            Defaults to `eps * max(rows, cols)`.

    Returns:
        MinNormSolution: Solution, singular values, numerical rank and residual norm.

    Raises:
        ValueError: On a dimension mismatch or non-finite input.

    Examples:
        >>> sol = pseudo_inverse_apply(np.array([[2.0, 0.0], [0.0, 0.0]]), np.ones(2))
        >>> sol.x, sol.residual
        (array([0.5, 0. ]), 1.0)
    """
    M = as_matrix(M)
    b = as_vector(b, "right-hand side")
    rows, cols = M.shape
    if b.shape[0] != rows:
        raise ValueError(
            f"Dimension mismatch: matrix has {rows} rows, right-hand side has {b.shape[0]}"
        )
    U, s, V = svd(M)
    r = svd_rank(s, rows, cols, rank_tol)
    x = V[:, :r] @ ((U[:, :r].T @ b) / s[:r])
    residual = float(np.linalg.norm(M @ x - b))
    return MinNormSolution(x, s, r, residual)


def orthonormal_range(M: DenseMatrix, rank_tol: float | None = None) -> SubspaceBasis:
    """Orthonormal basis of the numerical column space of `M`."""
    M = as_matrix(M)
    rows, cols = M.shape
    U, s, _ = svd(M)
    r = svd_rank(s, rows, cols, rank_tol)
    return SubspaceBasis(rows, U[:, :r])


def orthonormal_nullspace(M: DenseMatrix, rank_tol: float | None = None) -> SubspaceBasis:
    """Orthonormal basis of the numerical nullspace of `M`.

    The dimension is `cols(M)` minus the numerical rank.
    """
    M = as_matrix(M)
    rows, cols = M.shape
    # a thin SVD already has a square V when rows >= cols
    _, s, V = svd(M, full_matrices=rows < cols)
    r = svd_rank(s, rows, cols, rank_tol)
    return SubspaceBasis(cols, V[:, r:])


def _check_pair(Xb: SubspaceBasis, Yb: SubspaceBasis) -> None:
    if Xb.ambient_dim != Yb.ambient_dim:
        raise ValueError(
            f"Subspaces live in different spaces: {Xb.ambient_dim} vs {Yb.ambient_dim}"
        )


def principal_angles(Xb: SubspaceBasis, Yb: SubspaceBasis) -> CoeffVector:
    """Principal angles between two subspaces, in radians, ascending.

    There are `min(dim X, dim Y)` angles; the cosine of the first one is
    `projector_product_norm(Xb, Yb)`.
    """
    _check_pair(Xb, Yb)
    if Xb.dim == 0 or Yb.dim == 0:
        return np.zeros(0)
    cosines = scipy.linalg.svdvals(Xb.columns.T @ Yb.columns)
    return np.arccos(np.clip(cosines, -1.0, 1.0))


def projector_product_norm(Xb: SubspaceBasis, Yb: SubspaceBasis) -> float:
    """Norm of the product of the orthogonal projectors, `||Pi_X Pi_Y||`.

    Equals `sup (x, y)` over unit vectors `x in X`, `y in Y`, i.e. the
    cosine of the minimal principal angle. Symmetric in its arguments;
    0 if either subspace is trivial.
    """
    _check_pair(Xb, Yb)
    if Xb.dim == 0 or Yb.dim == 0:
        return 0.0
    value = scipy.linalg.svdvals(Xb.columns.T @ Yb.columns)[0]
    return float(min(value, 1.0))


def complement_product_norm(Xb: SubspaceBasis, Yb: SubspaceBasis) -> float:
    """Norm `||(I - Pi_X) Pi_Y||` without a basis of the complement of X.

    This is `projector_product_norm(X^⊥, Y)`; the orthogonal complement
    is never materialized, which matters when `X` is small and the
    ambient space is large.
    """
    _check_pair(Xb, Yb)
    if Yb.dim == 0:
        return 0.0
    V = Yb.columns
    if Xb.dim > 0:
        V = V - Xb.columns @ (Xb.columns.T @ V)
    value = scipy.linalg.svdvals(V)[0]
    return float(min(value, 1.0))


def subspace_gap(Xb: SubspaceBasis, Yb: SubspaceBasis) -> float:
    """Gap between two subspaces, `||P_X - P_Y||` in the operator 2-norm.

    Computed as `max(||(I - P_Y) P_X||, ||(I - P_X) P_Y||)`.
    """
    _check_pair(Xb, Yb)
    return max(complement_product_norm(Yb, Xb), complement_product_norm(Xb, Yb))


def project(Xb: SubspaceBasis, v: CoeffVector) -> CoeffVector:
    """Orthogonal projection of `v` onto the span of `Xb`."""
    v = as_vector(v)
    if v.shape[0] != Xb.ambient_dim:
        raise ValueError(
            f"Dimension mismatch: vector has length {v.shape[0]}, "
            f"subspace lives in dimension {Xb.ambient_dim}"
        )
    if Xb.dim == 0:
        return np.zeros_like(v)
    return Xb.columns @ (Xb.columns.T @ v)


def projector_matrix(Xb: SubspaceBasis) -> DenseMatrix:
    """Assembled orthogonal projector onto the span of `Xb`."""
    return Xb.columns @ Xb.columns.T
