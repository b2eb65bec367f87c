"""Nested discretization families and the projected operator `A_{n,m}`.

Discretization subspaces are selections of the ambient orthonormal
basis, so `P_n` and `Q_m` are coordinate projectors and the projected
operator `Q_m A P_n` is a plain sub-block of the truncated matrix.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING

import numpy as np

from projlab.linalg import orthonormal_nullspace
from projlab.models.base import (
    GridIndexMap,
    NestedFamily,
    ProjectedSystem,
    SubspaceBasis,
    TruncatedOperator,
)
from projlab.models.helpers import INFINITY

if TYPE_CHECKING:
    from projlab.models.types import DenseMatrix, Level

logger = logging.getLogger(__name__)


def _validate(family: NestedFamily) -> NestedFamily:
    """Check nestedness and coverage of a schedule."""
    previous: set[int] = set()
    for level, indices in enumerate(family.schedule, start=1):
        current = set(indices)
        if not previous <= current:
            raise ValueError(f"Family {family.label!r} is not nested at level {level}")
        if any(k < 0 or k >= family.ambient_dim for k in current):
            raise ValueError(f"Family {family.label!r} selects indices outside the truncation")
        previous = current
    if len(previous) != family.ambient_dim:
        raise ValueError(
            f"Family {family.label!r} does not cover all {family.ambient_dim} ambient indices"
        )
    return family


def coordinate_family(ambient_dim: int, step: int = 1) -> NestedFamily:
    """Prefix selections: level n spans the first `n * step` coordinates.

    The last level is clipped to the ambient dimension.
    """
    if ambient_dim < 1 or step < 1:
        raise ValueError(f"ambient_dim and step must be positive, got {ambient_dim}, {step}")
    levels = math.ceil(ambient_dim / step)
    schedule = tuple(tuple(range(min(n * step, ambient_dim))) for n in range(1, levels + 1))
    return _validate(NestedFamily(ambient_dim, schedule, f"coordinate(step={step})"))


def grid_family(side: int) -> NestedFamily:
    """Grid corners: level n spans `e_{ij}` with `1 <= i, j <= n`."""
    grid = GridIndexMap(side)
    schedule = tuple(
        tuple(sorted(grid.flat(i, j) for i in range(1, n + 1) for j in range(1, n + 1)))
        for n in range(1, side + 1)
    )
    return _validate(NestedFamily(grid.size, schedule, f"grid(side={side})"))


def embedding(family: NestedFamily, level: Level) -> DenseMatrix:
    """The `ambient x |level|` coordinate selection matrix."""
    indices = family.indices(level)
    E = np.zeros((family.ambient_dim, indices.size))
    E[indices, np.arange(indices.size)] = 1.0
    return E


def projector(family: NestedFamily, level: Level) -> SubspaceBasis:
    """Canonical coordinate basis of the subspace selected at `level`."""
    return SubspaceBasis(family.ambient_dim, embedding(family, level))


def complement_indices(family: NestedFamily, level: Level) -> np.ndarray:
    """Ambient indices outside the subspace at `level` (the range of `I - P`)."""
    mask = np.ones(family.ambient_dim, dtype=bool)
    mask[family.indices(level)] = False
    return np.flatnonzero(mask)


def assemble(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
) -> ProjectedSystem:
    """Assemble `A_{n,m} = Q_m A P_n` between the coordinates of `X_n` and `Y_m`.

    With `m = INFINITY` this is `A_n = A P_n` (projected least squares),
    with `n = INFINITY` it is `Q_m A` (dual least squares).

    Raises:
        ValueError: If the families do not match the operator or a level
            exceeds the truncation.
    """
    if FX.ambient_dim != op.x_dim or FY.ambient_dim != op.y_dim:
        raise ValueError(
            f"Families ({FX.ambient_dim}, {FY.ambient_dim}) do not match "
            f"operator dimensions ({op.x_dim}, {op.y_dim})"
        )
    x_indices = FX.indices(n)
    y_indices = FY.indices(m)
    logger.debug(f"Assembling A_(n,m) for n={n}, m={m}: {y_indices.size}x{x_indices.size}")
    matrix = op.matrix[np.ix_(y_indices, x_indices)]
    return ProjectedSystem(matrix, x_indices, y_indices, n, m, op.x_dim, op.y_dim)


def intersection_nullspace(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    rank_tol: float | None = None,
) -> SubspaceBasis:
    """Orthonormal basis of `N(Q_m A) ∩ X_n`, in ambient coordinates.

    This is the nullspace of the assembled block, lifted back from `X_n`.
    With `m = INFINITY` it is `N(A) ∩ X_n`.
    """
    system = assemble(op, FX, n, FY, m)
    local = orthonormal_nullspace(system.matrix, rank_tol)
    columns = np.zeros((op.x_dim, local.dim))
    columns[system.x_indices, :] = local.columns
    return SubspaceBasis(op.x_dim, columns)

