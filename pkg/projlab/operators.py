"""Concrete operator families, realized on finite basis prefixes.

Each constructor returns a `TruncatedOperator`: a dense coefficient
matrix together with an advisory `tail_bound`, an estimate of the norm of
whatever the truncation discarded. Tail bounds are metadata only; the
diagnostics print them next to their tolerances.
"""

from __future__ import annotations

import logging
import warnings
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg

from projlab.linalg import as_matrix, as_vector, spectral_norm
from projlab.models.base import (
    DuParams,
    GridIndexMap,
    NeubauerParams,
    SeidmanParams,
    TruncatedOperator,
)

if TYPE_CHECKING:
    from projlab.models.types import CoeffVector, DenseMatrix

logger = logging.getLogger(__name__)


def make_dense(matrix: DenseMatrix, label: str = "dense") -> TruncatedOperator:
    """Wrap a user-supplied matrix. The tail bound is 0."""
    matrix = as_matrix(matrix, "operator matrix")
    rows, cols = matrix.shape
    return TruncatedOperator(matrix, x_dim=cols, y_dim=rows, tail_bound=0.0, label=label)


def make_seidman(p: SeidmanParams) -> TruncatedOperator:
    """Diagonal operator with a rank-one perturbation, `diag(gamma) + beta (x) e_1`.

    The rank-one term reads the first coordinate and adds multiples of
    `beta`: `x -> gamma * x + x_1 * beta`. With `p.transpose` it is
    `x -> gamma * x + (beta, x) e_1` instead.

    The tail bound is `max(gamma_{K+1}, sqrt(sum_{k>K} beta_k^2))` from the
    caller-supplied `gamma_next` and `beta_tail_sq`; missing values count
    as 0 and trigger a warning.

    Raises:
        ValueError: If a `gamma` entry is not positive or the lengths differ.

    Examples:
        >>> make_seidman(SeidmanParams(gamma=(1.0, 1.0), beta=(0.0, 1.0))).matrix
        array([[1., 0.],
               [1., 1.]])
    """
    gamma = as_vector(p.gamma, "gamma")
    beta = as_vector(p.beta, "beta")
    if gamma.shape != beta.shape:
        raise ValueError(
            f"gamma and beta must have the same length K, got {gamma.size} and {beta.size}"
        )
    if np.any(gamma <= 0):
        bad = int(np.argmax(gamma <= 0)) + 1
        raise ValueError(f"gamma must be strictly positive, gamma_{bad} = {gamma[bad - 1]}")
    if np.any(np.diff(gamma) > 0):
        logger.warning("gamma is not decreasing; the tail bound gamma_{K+1} may be wrong")

    matrix = np.diag(gamma)
    if p.transpose:
        matrix[0, :] += beta
    else:
        matrix[:, 0] += beta

    if p.gamma_next is None or p.beta_tail_sq is None:
        warnings.warn(
            "Seidman tail bound not supplied (gamma_next / beta_tail_sq); using 0",
            stacklevel=2,
        )
    tail = max(p.gamma_next or 0.0, float(np.sqrt(p.beta_tail_sq or 0.0)))
    kind = "transpose" if p.transpose else "standard"
    return TruncatedOperator(
        matrix,
        x_dim=p.K,
        y_dim=p.K,
        tail_bound=tail,
        label=f"seidman(K={p.K}, {kind})",
    )


def geometric_unit_vector(K: int, ratio: float = 0.5) -> CoeffVector:
    """Unit vector proportional to `(1, ratio, ratio^2, ...)` of length K."""
    if K < 1:
        raise ValueError(f"K must be positive, got {K}")
    e = ratio ** np.arange(K, dtype=float)
    return e / np.linalg.norm(e)


def make_du(p: DuParams) -> TruncatedOperator:
    """The orthogonal projector `I - (., e) e` onto the complement of `e`.

    Raises:
        ValueError: If `e` is not a unit vector (to 1e-12).
    """
    e = as_vector(p.e, "e")
    norm = np.linalg.norm(e)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"e must have unit norm, got ||e|| = {norm!r}")
    matrix = np.eye(e.size) - np.outer(e, e)
    return TruncatedOperator(
        matrix,
        x_dim=p.K,
        y_dim=p.K,
        tail_bound=p.tail_bound,
        label=f"du(K={p.K})",
    )


def check_neubauer_params(p: NeubauerParams) -> None:
    """Validate the grid operator parameters."""
    if not 0.0 < p.q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {p.q}")
    if p.side < 2:
        raise ValueError(f"side must be at least 2, got {p.side}")


def make_neubauer(p: NeubauerParams) -> TruncatedOperator:
    """Grid operator `(Ax)_{ij} = xi_{ij} + q^j xi_{i1}` for `j >= 2`, `0` for `j = 1`.

    The basis `e_{ij}` is flattened with `GridIndexMap(side)`. Rows with
    `j = 1` are zero; row `(i, j)` has a 1 in column `(i, j)` and `q^j`
    in column `(i, 1)`. The discarded rows `j > side` would contribute at
    most `q^{side+1} / sqrt(1 - q^2)` per unit of `xi_{i1}`, which is the
    tail bound.

    Raises:
        ValueError: If `q` is outside (0, 1) or `side < 2`.
    """
    check_neubauer_params(p)
    grid = GridIndexMap(p.side)
    powers = p.q ** np.arange(1, p.side + 1, dtype=float)

    block = np.zeros((p.side, p.side))
    block[1:, 1:] = np.eye(p.side - 1)
    block[1:, 0] = powers[1:]
    # rows and columns (i, .) only couple to each other
    matrix = scipy.linalg.block_diag(*([block] * p.side))

    tail = p.q ** (p.side + 1) / np.sqrt(1.0 - p.q**2)
    logger.debug(f"Built Neubauer operator with {grid.size} grid cells, tail {tail:.3e}")
    return TruncatedOperator(
        matrix,
        x_dim=grid.size,
        y_dim=grid.size,
        tail_bound=float(tail),
        label=f"neubauer(q={p.q}, side={p.side})",
    )


def neubauer_nullspace_test(p: NeubauerParams, x: CoeffVector, tol: float = 1e-10) -> bool:
    """Membership test for the nullspace of the grid operator.

    `x` is in the nullspace iff `xi_{ij} = -q^j xi_{i1}` for all stored
    `i` and `j > 1`. The comparison is absolute to `tol * max(1, ||x||)`.
    """
    check_neubauer_params(p)
    grid = GridIndexMap(p.side).grid(as_vector(x))
    powers = p.q ** np.arange(2, p.side + 1, dtype=float)
    defect = grid[:, 1:] + np.outer(grid[:, 0], powers)
    scale = max(1.0, float(np.linalg.norm(x)))
    return bool(np.max(np.abs(defect), initial=0.0) <= tol * scale)


def apply(op: TruncatedOperator, x: CoeffVector) -> CoeffVector:
    """Matrix-vector product `A x`."""
    x = as_vector(x)
    if x.shape[0] != op.x_dim:
        raise ValueError(f"Expected a vector of length {op.x_dim}, got {x.shape[0]}")
    return op.matrix @ x


def apply_adjoint(op: TruncatedOperator, y: CoeffVector) -> CoeffVector:
    """Adjoint product `A^T y`."""
    y = as_vector(y)
    if y.shape[0] != op.y_dim:
        raise ValueError(f"Expected a vector of length {op.y_dim}, got {y.shape[0]}")
    return op.matrix.T @ y


def operator_norm(op: TruncatedOperator) -> float:
    """Spectral norm of the truncated operator."""
    return spectral_norm(op.matrix)


def random_in_range_of_adjoint(op: TruncatedOperator, seed: int | None = 0) -> CoeffVector:
    """Unit vector `A^T y / ||A^T y||` for a seeded standard normal `y`.

    It lies in `R(A^T)`, hence in `N(A)^⊥`, so it is a valid exact
    solution for every operator.

    Raises:
        ValueError: If the operator is zero.
    """
    rng = np.random.default_rng(seed)
    x = op.matrix.T @ rng.standard_normal(op.y_dim)
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        raise ValueError(f"Operator {op.label!r} is zero; its adjoint has no range")
    return x / norm
