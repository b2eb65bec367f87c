"""Computable versions of the convergence conditions.

Every condition is phrased as a supremum over all levels `(n, m)`. The
functions here evaluate it at one level; a sweep turns the values into a
per-level profile and the verdicts only ever say "bounded over the
computed window".
"""

from __future__ import annotations

import logging
import math
from collections.abc import Collection, Sequence
from typing import TYPE_CHECKING, Optional

import numpy as np
import scipy.linalg

from projlab.discretization import complement_indices, intersection_nullspace, projector
from projlab.linalg import (
    as_matrix,
    as_vector,
    complement_product_norm,
    orthonormal_nullspace,
    orthonormal_range,
    project,
    spectral_norm,
    subspace_gap,
    svd,
    svd_rank,
)
from projlab.models.base import (
    AngleConditions,
    ConditionReport,
    LocalVerdict,
    RatioBounds,
    RatioConditions,
    SimpleProducts,
    SpaceConditionProbe,
    SubspaceBasis,
)
from projlab.models.helpers import INFINITY
from projlab.solve import apply_projected_pinv, factor

if TYPE_CHECKING:
    from projlab.models.base import NestedFamily, ProjectedFactors, SolutionRecord, TruncatedOperator
    from projlab.models.types import CoeffVector, DenseMatrix, Level

logger = logging.getLogger(__name__)

DIAGNOSTICS = (
    "ubc",
    "angles",
    "ratios",
    "natterer",
    "luecke_hickey",
    "simple",
    "wiederwas",
    "adjoint_dist",
    "error_bound",
    "gap",
)
"""Names accepted by `condition_report(requested=...)`."""

DEFAULT_WEAK_FUNCTIONALS = 25


def _scaled_right(M: DenseMatrix, rank_tol: float | None) -> DenseMatrix:
    """`V diag(1 / s)` of `M`; `||B M^+|| = ||B V diag(1 / s)||` as `U^T` has orthonormal rows."""
    rows, cols = M.shape
    _, s, V = svd(M)
    r = svd_rank(s, rows, cols, rank_tol)
    return V[:, :r] / s[:r]


def _rows(pf: ProjectedFactors, op: TruncatedOperator) -> DenseMatrix:
    """Rows of `Q_m A`; the whole matrix, uncopied, when `m = INFINITY`."""
    if pf.system.m is INFINITY:
        return op.matrix
    return op.matrix[pf.system.y_indices, :]


def _lift(pf: ProjectedFactors, basis: SubspaceBasis) -> SubspaceBasis:
    columns = np.zeros((pf.system.x_dim, basis.dim))
    columns[pf.system.x_indices, :] = basis.columns
    return SubspaceBasis(pf.system.x_dim, columns)


def _range_primal(pf: ProjectedFactors, op: TruncatedOperator, rank_tol: float | None) -> SubspaceBasis:
    """`R(A*_{n,m} A)`, a subspace of `X_n`."""
    G = pf.system.matrix.T @ _rows(pf, op)
    return _lift(pf, orthonormal_range(G, rank_tol))


def _range_dual(pf: ProjectedFactors, op: TruncatedOperator, rank_tol: float | None) -> SubspaceBasis:
    """`R(A* A_{n,m})` in ambient coordinates."""
    H = _rows(pf, op).T @ pf.system.matrix
    return orthonormal_range(H, rank_tol)


def ubc_proxy(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    K: int | None = None,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> tuple[float, float]:
    """Uniform boundedness proxy `||A_{n,m}^+ A||` on the first K coordinates.

    Args:
        op (TruncatedOperator): The operator.
        FX (NestedFamily): Domain family.
        n (Level): Domain level.
        FY (NestedFamily): Codomain family.
        m (Level): Codomain level.
        K (int | None): Restrict `A` to the first K ambient coordinates.
            Defaults to the whole truncation.
        rank_tol (float | None): Relative rank threshold.
        factors (ProjectedFactors | None): Reuse an existing factorization.

    Returns:
        tuple[float, float]: `||A_{n,m}^+ A||` and the variant
            `||A_{n,m}^+ A (I - P_n)||`, both restricted to the first K
            coordinates.

    Raises:
        ValueError: If K does not cover `X_n`.
    """
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    K = op.x_dim if K is None else K
    if pf.system.x_indices.size and K <= int(pf.system.x_indices.max()):
        raise ValueError(f"K={K} does not cover X_n (largest index {pf.system.x_indices.max()})")
    if K > op.x_dim:
        raise ValueError(f"K={K} exceeds the truncation {op.x_dim}")

    block = pf.pinv() @ _rows(pf, op)[:, :K]
    outside = complement_indices(FX, n)
    outside = outside[outside < K]
    return spectral_norm(block), spectral_norm(block[:, outside])


def angle_conditions(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> AngleConditions:
    """The three projector-product norms of the angle conditions.

    Uses `N(A*_{n,m} A) = R(A* A_{n,m})^⊥` and its dual so only ranges are
    ever factored. A zero range gives `rho = 0` and sets `degenerate`.
    """
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    primal = _range_primal(pf, op, rank_tol)
    dual = _range_dual(pf, op, rank_tol)
    degenerate = primal.dim == 0 or dual.dim == 0
    if degenerate:
        logger.debug(f"Degenerate ranges at n={n}, m={m}")

    return AngleConditions(
        rho_primal=complement_product_norm(dual, primal),
        rho_dual=complement_product_norm(primal, dual),
        rho_condadj=complement_product_norm(projector(FX, n), dual),
        degenerate=degenerate,
    )


def ratio_bounds(B: DenseMatrix, D: DenseMatrix, rank_tol: float | None = None) -> RatioBounds:
    """Suprema of `||Bz|| / ||Mz||` and `||Bz|| / ||Dz||` with `M = [D; B]`.

    The first is `||B M^+||`. The second is `||B D^+||` when
    `N(D) ⊆ N(B)` and infinite otherwise.

    Examples:
        >>> ratio_bounds(np.zeros((1, 2)), np.eye(2))
        RatioBounds(eta=0.0, C=0.0, finite=True)
    """
    B = as_matrix(B, "B")
    D = as_matrix(D, "D")
    if B.shape[1] != D.shape[1]:
        raise ValueError(f"B and D act on different spaces: {B.shape[1]} vs {D.shape[1]} columns")

    eta = min(spectral_norm(B @ _scaled_right(np.vstack([D, B]), rank_tol)), 1.0)
    kernel = orthonormal_nullspace(D, rank_tol)
    scale = max(spectral_norm(B), spectral_norm(D), 1.0)
    if kernel.dim and spectral_norm(B @ kernel.columns) > 1e3 * np.finfo(float).eps * scale * max(B.shape):
        return RatioBounds(eta, math.inf, False)
    return RatioBounds(eta, spectral_norm(B @ _scaled_right(D, rank_tol)), True)


def ratio_conditions(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> RatioConditions:
    """The rewritten ratio conditions for `M = A* Q_m A P_n` on `X_n`.

    `B = (I - P_n) M` and `D = P_n M`. For operator-derived blocks
    `N(D) = N(A_{n,m}) ⊆ N(B)`, so `C_threeA` is finite here whenever
    `eta_oneA < 1`.
    """
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    H = _rows(pf, op).T @ pf.system.matrix
    outside = complement_indices(FX, n)
    bounds = ratio_bounds(H[outside, :], H[pf.system.x_indices, :], rank_tol)
    return RatioConditions(bounds.eta, bounds.C, bounds.finite)


def natterer_value(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    x: CoeffVector,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> float:
    """Upper bound of `min_{u in X_n} ||x - u|| + ||A_{n,m}^+ A (x - u)||`, over `||x||`.

    The smooth surrogate `||x - u||^2 + kappa^2 ||A (x - u)||^2` is
    minimized in closed form. The true objective is evaluated there and
    at the candidates `u = P_n x` and `u = x_{n,m}`; the smallest value is
    returned. 0 for `x = 0`.
    """
    x = as_vector(x, "x")
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        return 0.0

    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    system = pf.system
    A = op.matrix

    def objective(u: CoeffVector) -> float:
        w = x - u
        return float(np.linalg.norm(w) + np.linalg.norm(apply_projected_pinv(pf, op, w)))

    k2 = pf.kappa**2
    AE = A[:, system.x_indices]
    lhs = np.eye(system.x_indices.size) + k2 * (AE.T @ AE)
    rhs = x[system.x_indices] + k2 * (AE.T @ (A @ x))
    surrogate = system.embed_x(scipy.linalg.solve(lhs, rhs, assume_a="pos"))

    candidates = (surrogate, system.embed_x(x[system.x_indices]), apply_projected_pinv(pf, op, x))
    return min(objective(u) for u in candidates) / norm


def simple_products(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    x: Optional[CoeffVector] = None,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> SimpleProducts:
    """Product-type sufficient conditions, each a norm times `||A_{n,m}^+||`."""
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    outside = complement_indices(FX, n)
    tail = op.matrix[:, outside]
    local = None
    if x is not None:
        x = as_vector(x, "x")
        local = float(np.linalg.norm(tail @ x[outside])) * pf.kappa
    tail_norm = spectral_norm(tail)
    projected = tail_norm if m is INFINITY else spectral_norm(tail[pf.system.y_indices, :])
    return SimpleProducts(
        simple_global=tail_norm * pf.kappa,
        simple_local=local,
        thisaa=projected * pf.kappa,
    )


def luecke_hickey(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    x_nm: CoeffVector,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> float:
    """`||A^T (A_{n,m}^T)^+ x_{n,m}||`."""
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    x_nm = as_vector(x_nm, "x_nm")
    z = pf.solve_adjoint(x_nm[pf.system.x_indices])
    return float(np.linalg.norm(op.matrix.T @ pf.system.embed_y(z)))


def wiederwas_norm(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> float:
    """`||P_n Pi_{N(A*_{n,m} A)}||`, computed as `||(I - Pi_{R(A* A_{n,m})}) P_n||`."""
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    return complement_product_norm(_range_dual(pf, op, rank_tol), projector(FX, n))


def adjoint_range_distance(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    x: CoeffVector,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> float:
    """Distance of `x` to `R(A*_{n,m})`."""
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    x = as_vector(x, "x")
    local = x[pf.system.x_indices]
    inside = pf.system.embed_x(pf.right @ (pf.right.T @ local))
    return float(np.linalg.norm(x - inside))


def error_bound(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    xdagger: CoeffVector,
    rank_tol: float | None = None,
    factors: ProjectedFactors | None = None,
) -> float:
    """A computable bound for `||x_{n,m} - x_dagger||`.

    `dist(x_dagger, R(A*_{n,m})) + ||A_{n,m}^+ A (I - P_n) x_dagger||`.
    """
    pf = factors or factor(op, FX, n, FY, m, rank_tol)
    xdagger = as_vector(xdagger, "xdagger")
    tail = xdagger.copy()
    tail[pf.system.x_indices] = 0.0
    dist = adjoint_range_distance(op, FX, n, FY, m, xdagger, rank_tol, factors=pf)
    return dist + float(np.linalg.norm(apply_projected_pinv(pf, op, tail)))


def nullspace_projection_norm(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    x: CoeffVector,
    rank_tol: float | None = None,
) -> float:
    """`||Pi_{N(Q_m A) ∩ X_n} x||`; non-decreasing in n, non-increasing in m."""
    return float(np.linalg.norm(project(intersection_nullspace(op, FX, n, FY, m, rank_tol), x)))


def operator_nullspace(op: TruncatedOperator, rank_tol: float | None = None) -> SubspaceBasis:
    """Numerical nullspace of the truncated operator."""
    basis = orthonormal_nullspace(op.matrix, rank_tol)
    logger.debug(f"Nullspace of {op.label or 'operator'} has dimension {basis.dim}")
    return basis


def range_gap(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    nullspace: SubspaceBasis | None = None,
    rank_tol: float | None = None,
) -> float:
    """`gap(R(A* A P_n), R(A^+ A P_n))`.

    `A^+ A` is the projector onto `N(A)^⊥`, so the second range is
    spanned by the columns of `(I - Pi_{N(A)}) P_n`.
    """
    nullspace = nullspace if nullspace is not None else operator_nullspace(op, rank_tol)
    x_indices = FX.indices(n)
    E = projector(FX, n).columns
    AtA = op.matrix.T @ op.matrix[:, x_indices]
    restricted = E - nullspace.columns @ nullspace.columns[x_indices, :].T
    return subspace_gap(orthonormal_range(AtA, rank_tol), orthonormal_range(restricted, rank_tol))


def space_condition_probe(
    op: TruncatedOperator,
    FX: NestedFamily,
    max_n: int,
    rank_tol: float | None = None,
    tol: float = 1e-10,
    nullspace: SubspaceBasis | None = None,
) -> SpaceConditionProbe:
    """Distances of a nullspace basis of `A` to `N(A) ∩ X_n` for `n = 1..max_n`.

    The condition holds at the truncation when every distance has
    dropped below `tol` by `max_n`. An injective operator holds trivially.
    """
    if max_n < 1 or max_n > FX.max_level:
        raise ValueError(f"max_n must lie in 1..{FX.max_level}, got {max_n}")
    Z = nullspace if nullspace is not None else operator_nullspace(op, rank_tol)
    levels = tuple(range(1, max_n + 1))
    distances = np.zeros((len(levels), Z.dim))
    dims = []
    for row, level in enumerate(levels):
        x_indices = FX.indices(level)
        local = orthonormal_nullspace(op.matrix[:, x_indices], rank_tol)
        dims.append(local.dim)
        if Z.dim == 0:
            continue
        W = np.zeros((op.x_dim, local.dim))
        W[x_indices, :] = local.columns
        residual = Z.columns - W @ (W.T @ Z.columns)
        distances[row] = np.linalg.norm(residual, axis=0)

    holds = Z.dim == 0 or bool(np.all(distances[-1] <= tol))
    logger.info(f"Space condition probe up to n={max_n}: {'HOLDS' if holds else 'FAILS'}")
    return SpaceConditionProbe(levels, distances, tuple(dims), Z.dim, holds)


def default_test_functionals(ambient_dim: int, count: int = DEFAULT_WEAK_FUNCTIONALS) -> DenseMatrix:
    """Coordinate functionals on the first `count` ambient indices, one per row."""
    return np.eye(min(count, ambient_dim), ambient_dim)


def classify_local(
    records: Sequence[SolutionRecord],
    x_ref: CoeffVector,
    test_functionals: DenseMatrix | None = None,
    nullspace: SubspaceBasis | None = None,
    strong_tol: float = 1e-6,
    bound_factor: float = 100.0,
) -> LocalVerdict:
    """Finite-window verdict on local convergence of a sweep.

    Args:
        records (Sequence[SolutionRecord]): The sweep, in refinement order.
        x_ref (CoeffVector): Reference element, usually `x_dagger`.
        test_functionals (DenseMatrix | None): One functional per row.
            Defaults to the first 25 coordinate functionals.
        nullspace (SubspaceBasis | None): Basis of `N(A)`; without it the
            drift series is empty.
        strong_tol (float): Slack of the strong criterion
            `limsup ||x_{n,m}|| <= ||x_ref|| + strong_tol`.
        bound_factor (float): The window counts as bounded when
            `max ||x_{n,m}|| <= bound_factor * max(||x_ref||, 1)`.

    Returns:
        LocalVerdict: The verdict; the limsup is taken over the second
            half of the window.

    Raises:
        ValueError: If the sweep is empty.
    """
    if not records:
        raise ValueError("Cannot classify an empty sweep")
    x_ref = as_vector(x_ref, "x_ref")
    if test_functionals is None:
        test_functionals = default_test_functionals(x_ref.size)
    T = np.atleast_2d(np.asarray(test_functionals, dtype=float))

    norms = np.array([r.norm for r in records])
    reference_norm = float(np.linalg.norm(x_ref))
    limsup = float(norms[len(norms) // 2 :].max())
    bounded = bool(norms.max() <= bound_factor * max(reference_norm, 1.0))

    weak = tuple(
        float(np.max(np.abs(T @ (r.x - x_ref)), initial=0.0)) if T.size else 0.0 for r in records
    )
    drift: tuple[float, ...] = ()
    if nullspace is not None:
        drift = tuple(float(np.linalg.norm(project(nullspace, r.x))) for r in records)

    return LocalVerdict(
        bounded=bounded,
        limsup_norm=limsup,
        reference_norm=reference_norm,
        strong_criterion_met=limsup <= reference_norm + strong_tol,
        weak_proxy=weak,
        nullspace_drift=drift,
    )


def condition_report(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    requested: Collection[str] = DIAGNOSTICS,
    xdagger: CoeffVector | None = None,
    x_nm: CoeffVector | None = None,
    K: int | None = None,
    nullspace: SubspaceBasis | None = None,
    rank_tol: float | None = None,
) -> ConditionReport:
    """Evaluate the requested diagnostics at one level.

    The block is factored once and shared. Diagnostics that need an
    element are skipped when it is missing; `gap` needs a finite `n`.

    Raises:
        ValueError: On an unknown diagnostic name.
    """
    unknown = set(requested) - set(DIAGNOSTICS)
    if unknown:
        raise ValueError(f"Unknown diagnostics: {', '.join(sorted(unknown))}")

    pf = factor(op, FX, n, FY, m, rank_tol)
    values: dict[str, object] = {}
    if "ubc" in requested:
        values["ubc_proxy"], values["ubc_tail"] = ubc_proxy(op, FX, n, FY, m, K, rank_tol, pf)
    if "angles" in requested:
        angles = angle_conditions(op, FX, n, FY, m, rank_tol, pf)
        values.update(angles._asdict())
    if "ratios" in requested:
        values.update(ratio_conditions(op, FX, n, FY, m, rank_tol, pf)._asdict())
    if "simple" in requested:
        values.update(simple_products(op, FX, n, FY, m, xdagger, rank_tol, pf)._asdict())
    if "wiederwas" in requested:
        values["wiederwas"] = wiederwas_norm(op, FX, n, FY, m, rank_tol, pf)
    if xdagger is not None:
        if "natterer" in requested:
            values["natterer_value"] = natterer_value(op, FX, n, FY, m, xdagger, rank_tol, pf)
        if "adjoint_dist" in requested:
            values["adjoint_dist"] = adjoint_range_distance(op, FX, n, FY, m, xdagger, rank_tol, pf)
        if "error_bound" in requested:
            values["error_bound"] = error_bound(op, FX, n, FY, m, xdagger, rank_tol, pf)
    if x_nm is not None and "luecke_hickey" in requested:
        values["luecke_hickey"] = luecke_hickey(op, FX, n, FY, m, x_nm, rank_tol, pf)
    if "gap" in requested and isinstance(n, int):
        values["gap"] = range_gap(op, FX, n, nullspace, rank_tol)

    if logger.isEnabledFor(logging.DEBUG):
        logger.debug(f"Diagnostics at n={n}, m={m}: {values}")
    return ConditionReport(n=n, m=m, **values)
