"""Tests for nested families and the projected operator."""

import numpy as np
import pytest

from projlab.discretization import (
    _validate,
    assemble,
    complement_indices,
    coordinate_family,
    embedding,
    grid_family,
    intersection_nullspace,
    projector,
)
from projlab.linalg import projector_matrix
from projlab.models.base import GridIndexMap, NeubauerParams, NestedFamily
from projlab.models.helpers import INFINITY
from projlab.operators import make_dense, make_neubauer


def test_grid_family_corners():
    """Level n selects the n x n corner of the grid."""
    family = grid_family(3)
    grid = GridIndexMap(3)
    assert family.indices(1).tolist() == [grid.flat(1, 1)]
    assert sorted(family.indices(2).tolist()) == sorted(grid.flat(i, j) for i in (1, 2) for j in (1, 2))
    assert set(family.indices(2)) <= set(family.indices(3))
    assert family.max_level == 3


def test_grid_index_map():
    """Row-major flat indices with 1-based grid indices."""
    grid = GridIndexMap(4)
    assert grid.flat(1, 1) == 0
    assert grid.flat(2, 3) == 6
    assert grid.unflat(6) == (2, 3)
    with pytest.raises(ValueError):
        grid.flat(0, 1)
    with pytest.raises(ValueError):
        grid.unflat(16)


def test_coordinate_family_steps():
    """Prefix families grow by `step` and clip at the ambient dimension."""
    family = coordinate_family(7, step=3)
    assert family.max_level == 3
    assert family.indices(1).tolist() == [0, 1, 2]
    assert family.indices(3).tolist() == list(range(7))
    assert family.indices(INFINITY).tolist() == list(range(7))


def test_family_level_errors():
    """Levels must be positive and inside the truncation."""
    family = coordinate_family(4)
    with pytest.raises(ValueError, match="exceeds the truncation"):
        family.indices(5)
    with pytest.raises(ValueError, match="Invalid level"):
        family.indices(0)


def test_non_nested_family_rejected():
    """Schedules must be nested and cover the truncation."""
    with pytest.raises(ValueError, match="not nested"):
        _validate(NestedFamily(2, ((0,), (1,))))
    with pytest.raises(ValueError, match="does not cover"):
        _validate(NestedFamily(3, ((0,), (0, 1))))


def test_projector_and_complement():
    """Coordinate projector and its complement indices."""
    family = coordinate_family(4)
    np.testing.assert_array_equal(projector_matrix(projector(family, 2)), np.diag([1.0, 1.0, 0.0, 0.0]))
    assert complement_indices(family, 2).tolist() == [2, 3]
    assert complement_indices(family, INFINITY).size == 0
    assert embedding(family, 1).shape == (4, 1)


def test_assemble_identity():
    """The identity gives an identity block on aligned families."""
    op = make_dense(np.eye(5))
    F = coordinate_family(5)
    system = assemble(op, F, 3, F, 3)
    np.testing.assert_array_equal(system.matrix, np.eye(3))


def test_assemble_neubauer_block():
    """The (1,2) row of the 2x2 grid block reads 0.25 from the (1,1) column."""
    op = make_neubauer(NeubauerParams(q=0.5, side=4))
    F = grid_family(4)
    grid = GridIndexMap(4)
    system = assemble(op, F, 2, F, 2)
    assert system.matrix.shape == (4, 4)
    row = system.y_indices.tolist().index(grid.flat(1, 2))
    col = system.x_indices.tolist().index(grid.flat(1, 1))
    assert system.matrix[row, col] == 0.25


def test_assemble_matches_projector_product():
    """`Q_m A P_n` equals the product with the assembled projectors."""
    rng = np.random.default_rng(11)
    A = rng.standard_normal((7, 6))
    op = make_dense(A)
    FX, FY = coordinate_family(6, 2), coordinate_family(7)
    system = assemble(op, FX, 2, FY, 5)
    P = projector_matrix(projector(FX, 2))
    Q = projector_matrix(projector(FY, 5))
    lifted = np.zeros((7, 6))
    lifted[np.ix_(system.y_indices, system.x_indices)] = system.matrix
    np.testing.assert_allclose(lifted, Q @ A @ P, atol=1e-14)


def test_assemble_infinity_sides():
    """`m = inf` keeps every row, `n = inf` every column."""
    op = make_dense(np.ones((3, 4)))
    FX, FY = coordinate_family(4), coordinate_family(3)
    assert assemble(op, FX, 2, FY, INFINITY).matrix.shape == (3, 2)
    assert assemble(op, FX, INFINITY, FY, 1).matrix.shape == (1, 4)


def test_assemble_infinity_then_restrict_rows():
    """Keeping all rows and then the rows of `Y_m` gives the `(n, m)` block exactly."""
    rng = np.random.default_rng(5)
    cases = [
        (make_dense(rng.standard_normal((7, 6))), coordinate_family(6), coordinate_family(7)),
        (make_neubauer(NeubauerParams(q=0.5, side=5)), grid_family(5), grid_family(5)),
    ]
    for op, FX, FY in cases:
        for n in range(1, FX.max_level + 1):
            full = assemble(op, FX, n, FY, INFINITY)
            position = {int(i): k for k, i in enumerate(full.y_indices)}
            for m in range(1, FY.max_level + 1):
                rows = [position[int(i)] for i in FY.indices(m)]
                np.testing.assert_array_equal(full.matrix[rows], assemble(op, FX, n, FY, m).matrix)


def test_assemble_rejects_mismatched_family():
    """Families must match the operator dimensions."""
    op = make_dense(np.eye(3))
    with pytest.raises(ValueError, match="do not match"):
        assemble(op, coordinate_family(4), 1, coordinate_family(3), 1)


def test_intersection_nullspace():
    """`N(Q_m A) ∩ X_n` shrinks as m grows and grows with n."""
    A = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    op = make_dense(A)
    FX, FY = coordinate_family(3), coordinate_family(2)
    assert intersection_nullspace(op, FX, 1, FY, INFINITY).dim == 0
    basis = intersection_nullspace(op, FX, 2, FY, INFINITY)
    assert basis.dim == 1
    np.testing.assert_allclose(np.abs(basis.columns[:, 0]), [2**-0.5, 2**-0.5, 0.0])
    assert intersection_nullspace(op, FX, 3, FY, 1).dim == 2
