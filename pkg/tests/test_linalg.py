"""Tests for the dense linear algebra kernels."""

import numpy as np
import pytest
import scipy.linalg

from projlab.linalg import (
    complement_product_norm,
    orthonormal_nullspace,
    orthonormal_range,
    principal_angles,
    project,
    projector_matrix,
    projector_product_norm,
    pseudo_inverse,
    pseudo_inverse_apply,
    spectral_norm,
    subspace_gap,
    svd,
    svd_rank,
)
from projlab.models.base import SubspaceBasis


def span(*vectors):
    """Orthonormal basis of the span of the given vectors."""
    return orthonormal_range(np.column_stack(vectors))


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(20240611)


def test_svd_diagonal():
    """Singular values of a diagonal matrix."""
    _, s, _ = svd(np.diag([3.0, 1.0]))
    np.testing.assert_allclose(s, [3.0, 1.0])


def test_svd_zero_matrix():
    """A zero matrix has zero singular values and rank 0."""
    _, s, _ = svd(np.zeros((2, 2)))
    np.testing.assert_array_equal(s, [0.0, 0.0])
    assert svd_rank(s, 2, 2) == 0


def test_svd_reconstruction(rng):
    """U diag(s) V^T reproduces the matrix."""
    M = rng.standard_normal((6, 5))
    U, s, V = svd(M)
    assert np.linalg.norm(U @ np.diag(s) @ V.T - M) <= 1e-10 * np.linalg.norm(M)


def test_svd_rejects_non_finite():
    """NaN entries are refused."""
    with pytest.raises(ValueError):
        svd(np.array([[1.0, np.nan]]))


def test_svd_rank_tolerance():
    """Relative threshold decides the numerical rank."""
    s = np.array([1.0, 1e-3, 1e-17])
    assert svd_rank(s, 3, 3) == 2
    assert svd_rank(s, 3, 3, rank_tol=1e-2) == 1
    with pytest.raises(ValueError):
        svd_rank(s, 3, 3, rank_tol=-1.0)


def test_pseudo_inverse_apply_rank_deficient():
    """Minimum-norm solution of a rank-deficient system."""
    sol = pseudo_inverse_apply(np.array([[2.0, 0.0], [0.0, 0.0]]), np.array([1.0, 1.0]))
    np.testing.assert_allclose(sol.x, [0.5, 0.0])
    assert sol.residual == pytest.approx(1.0)
    assert sol.rank == 1


def test_pseudo_inverse_apply_identity(rng):
    """The identity returns the right-hand side."""
    b = rng.standard_normal(4)
    sol = pseudo_inverse_apply(np.eye(4), b)
    np.testing.assert_allclose(sol.x, b)
    assert sol.residual == pytest.approx(0.0, abs=1e-14)


def test_pseudo_inverse_apply_dimension_mismatch():
    """Right-hand side must match the row count."""
    with pytest.raises(ValueError, match="Dimension mismatch"):
        pseudo_inverse_apply(np.eye(3), np.ones(2))


def test_pseudo_inverse_apply_matches_normal_equations(rng):
    """Fifty random 6x5 systems agree with the normal equations."""
    for _ in range(50):
        M = rng.standard_normal((6, 5))
        b = rng.standard_normal(6)
        oracle = np.linalg.solve(M.T @ M, M.T @ b)
        sol = pseudo_inverse_apply(M, b)
        np.testing.assert_allclose(sol.x, oracle, atol=1e-10, rtol=0)
        assert sol.residual == pytest.approx(np.linalg.norm(M @ oracle - b), abs=1e-10)


def test_pseudo_inverse_apply_min_norm_on_rank_deficient(rng):
    """Rank-deficient systems return the solution in R(M^T)."""
    M = rng.standard_normal((6, 3)) @ rng.standard_normal((3, 5))
    b = rng.standard_normal(6)
    sol = pseudo_inverse_apply(M, b)
    assert sol.rank == 3
    np.testing.assert_allclose(sol.x, scipy.linalg.pinv(M) @ b, atol=1e-10)
    kernel = orthonormal_nullspace(M)
    assert np.linalg.norm(kernel.columns.T @ sol.x) <= 1e-10


def test_pseudo_inverse_penrose_conditions(rng):
    """The four Penrose conditions hold."""
    M = rng.standard_normal((7, 3)) @ rng.standard_normal((3, 4))
    P = pseudo_inverse(M)
    np.testing.assert_allclose(M @ P @ M, M, atol=1e-10)
    np.testing.assert_allclose(P @ M @ P, P, atol=1e-10)
    np.testing.assert_allclose((M @ P).T, M @ P, atol=1e-10)
    np.testing.assert_allclose((P @ M).T, P @ M, atol=1e-10)


def test_orthonormal_range_examples():
    """Range of a rank-one matrix and of the zero matrix."""
    basis = orthonormal_range(np.array([[1.0, 1.0], [0.0, 0.0]]))
    assert basis.dim == 1
    np.testing.assert_allclose(np.abs(basis.columns[:, 0]), [1.0, 0.0])
    assert orthonormal_range(np.zeros((3, 2))).dim == 0


def test_orthonormal_range_fixes_columns(rng):
    """The projector onto the range fixes every column."""
    M = rng.standard_normal((8, 3))
    basis = orthonormal_range(M)
    assert basis.dim == 3
    np.testing.assert_allclose(basis.columns.T @ basis.columns, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(projector_matrix(basis) @ M, M, atol=1e-10)


def test_orthonormal_nullspace(rng):
    """Nullspace dimension is cols minus rank, both for wide and tall matrices."""
    wide = rng.standard_normal((2, 5))
    kernel = orthonormal_nullspace(wide)
    assert kernel.dim == 3
    assert np.linalg.norm(wide @ kernel.columns) <= 1e-12

    tall = np.column_stack([np.ones(6), np.ones(6), rng.standard_normal(6)])
    kernel = orthonormal_nullspace(tall)
    assert kernel.dim == 1
    np.testing.assert_allclose(np.abs(kernel.columns[:, 0]), [2**-0.5, 2**-0.5, 0.0], atol=1e-12)


def test_projector_product_norm_examples():
    """Cosine of the minimal angle for simple pairs."""
    X = span(np.array([1.0, 0.0, 0.0]))
    Y = span(np.array([1.0, 1.0, 0.0]))
    assert projector_product_norm(X, Y) == pytest.approx(2**-0.5)
    assert projector_product_norm(X, X) == pytest.approx(1.0)
    assert projector_product_norm(X, span(np.array([0.0, 0.0, 1.0]))) == pytest.approx(0.0)
    assert projector_product_norm(X, SubspaceBasis.empty(3)) == 0.0


def test_projector_product_norm_matches_assembled_product(rng):
    """The norm equals that of the assembled projector product, symmetrically."""
    X = orthonormal_range(rng.standard_normal((10, 3)))
    Y = orthonormal_range(rng.standard_normal((10, 4)))
    direct = np.linalg.norm(projector_matrix(X) @ projector_matrix(Y), 2)
    assert projector_product_norm(X, Y) == pytest.approx(direct, abs=1e-12)
    assert projector_product_norm(Y, X) == pytest.approx(direct, abs=1e-12)
    assert np.cos(principal_angles(X, Y)[0]) == pytest.approx(direct, abs=1e-8)


def test_complement_product_norm(rng):
    """`||(I - P_X) P_Y||` without forming the complement."""
    X = orthonormal_range(rng.standard_normal((10, 4)))
    Y = orthonormal_range(rng.standard_normal((10, 3)))
    direct = np.linalg.norm((np.eye(10) - projector_matrix(X)) @ projector_matrix(Y), 2)
    assert complement_product_norm(X, Y) == pytest.approx(direct, abs=1e-12)
    assert complement_product_norm(X, X) == pytest.approx(0.0, abs=1e-12)


def test_subspace_gap_examples():
    """Gap of identical and of orthogonal lines."""
    X = span(np.array([1.0, 0.0]))
    assert subspace_gap(X, X) == pytest.approx(0.0, abs=1e-14)
    assert subspace_gap(X, span(np.array([0.0, 1.0]))) == pytest.approx(1.0)


def test_subspace_gap_matches_projector_difference(rng):
    """Gap equals the norm of the projector difference."""
    X = orthonormal_range(rng.standard_normal((10, 3)))
    Y = orthonormal_range(rng.standard_normal((10, 3)))
    direct = np.linalg.norm(projector_matrix(X) - projector_matrix(Y), 2)
    assert subspace_gap(X, Y) == pytest.approx(direct, abs=1e-12)


def test_subspace_mismatch_raises():
    """Subspaces of different spaces cannot be compared."""
    with pytest.raises(ValueError, match="different spaces"):
        projector_product_norm(SubspaceBasis.empty(2), SubspaceBasis.empty(3))


def test_project():
    """Orthogonal projection onto a line."""
    X = span(np.array([1.0, 1.0]))
    np.testing.assert_allclose(project(X, np.array([1.0, 0.0])), [0.5, 0.5])
    np.testing.assert_array_equal(project(SubspaceBasis.empty(2), np.ones(2)), [0.0, 0.0])


def test_spectral_norm_large_matrix_matches_dense(rng):
    """The iterative path agrees with the dense singular values."""
    M = rng.standard_normal((60, 50))
    dense = scipy.linalg.svdvals(M)[0]
    assert spectral_norm(M) == pytest.approx(dense, rel=1e-12)
    assert spectral_norm(M, dense_limit=10) == pytest.approx(dense, rel=1e-10)
    assert spectral_norm(M, dense_limit=10) == spectral_norm(M, dense_limit=10)
    assert spectral_norm(np.zeros((0, 3))) == 0.0
