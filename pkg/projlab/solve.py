"""Minimum-norm projected solutions and the oblique decompositions.

`x_{n,m} = A_{n,m}^+ A x_dagger` is computed from the assembled block of
`Q_m A P_n`. The same factorization yields the two unique
decompositions of an element relative to `A_{n,m}`, and the projector
identities for `Pi_{N(Q_m A) ∩ X_n}` serve as a self-check of the
whole chain.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np

from projlab.discretization import assemble, intersection_nullspace
from projlab.linalg import as_vector, project, svd, svd_rank
from projlab.models.base import ObliqueParts, ProjectedFactors, SolutionRecord
from projlab.models.helpers import level_key

if TYPE_CHECKING:
    from projlab.models.base import NestedFamily, ProjectedSystem, TruncatedOperator
    from projlab.models.types import CoeffVector, Level

logger = logging.getLogger(__name__)


def projected_pinv(system: ProjectedSystem, rank_tol: float | None = None) -> ProjectedFactors:
    """Factor an assembled block once so its pseudoinverse can be applied repeatedly."""
    rows, cols = system.matrix.shape
    U, s, V = svd(system.matrix)
    r = svd_rank(s, rows, cols, rank_tol)
    return ProjectedFactors(system, U[:, :r], s[:r], V[:, :r])


def factor(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    rank_tol: float | None = None,
) -> ProjectedFactors:
    """Assemble `A_{n,m}` and factor it."""
    return projected_pinv(assemble(op, FX, n, FY, m), rank_tol)


def _check_ambient(op: TruncatedOperator, x: CoeffVector, name: str) -> CoeffVector:
    x = as_vector(x, name)
    if x.shape[0] != op.x_dim:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {op.x_dim}")
    return x


def apply_projected_pinv(pf: ProjectedFactors, op: TruncatedOperator, x: CoeffVector) -> CoeffVector:
    """The ambient vector `A_{n,m}^+ A x`."""
    b = (op.matrix @ x)[pf.system.y_indices]
    return pf.system.embed_x(pf.solve(b))


def solve_projected(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    xdagger: CoeffVector,
    rank_tol: float | None = None,
    nullspace_tol: float = 1e-10,
) -> SolutionRecord:
    """Compute the discretized solution `x_{n,m} = A_{n,m}^+ A x_dagger`.

    The right-hand side is `Q_m A x_dagger` evaluated on the truncation;
    whatever the truncation discarded is not corrected for, only reported
    through `tail_bound`.

    Args:
        op (TruncatedOperator): The operator.
        FX (NestedFamily): Nested subspaces of the domain.
        n (Level): Domain level, or `INFINITY` for dual least squares.
        FY (NestedFamily): Nested subspaces of the codomain.
        m (Level): Codomain level, or `INFINITY` for projected least squares.
        xdagger (CoeffVector): The exact solution, in ambient coordinates.
        rank_tol (float | None): Relative rank threshold for `A_{n,m}`.
        nullspace_tol (float): Tolerance of the internal check that
            `x_{n,m}` lies in `N(A_{n,m})^⊥`.

    Returns:
        SolutionRecord: The solution with its conditioning and error.

    Raises:
        ValueError: On mismatched dimensions or invalid levels.
        numpy.linalg.LinAlgError: If the SVD does not converge.
    """
    xdagger = _check_ambient(op, xdagger, "xdagger")
    pf = factor(op, FX, n, FY, m, rank_tol)
    system = pf.system
    b = (op.matrix @ xdagger)[system.y_indices]
    coeffs = pf.solve(b)
    x = system.embed_x(coeffs)

    # x_{n,m} must lie in R(A_{n,m}^T) = N(A_{n,m})^⊥
    leak = float(np.linalg.norm(coeffs - pf.right @ (pf.right.T @ coeffs)))
    norm = float(np.linalg.norm(x))
    consistent = leak <= nullspace_tol * max(1.0, norm)
    if not consistent:
        logger.warning(f"x_(n,m) leaves N(A_(n,m))^perp by {leak:.3e} at n={n}, m={m}")

    residual = float(np.linalg.norm(system.matrix @ coeffs - b))
    logger.debug(f"Solved n={n}, m={m}: rank {pf.rank}, ||x||={norm:.6g}, kappa={pf.kappa:.6g}")
    return SolutionRecord(
        n=n,
        m=m,
        x=x,
        norm=norm,
        residual=residual,
        sigma_min=pf.sigma_min,
        kappa=pf.kappa,
        rank=pf.rank,
        error_to_reference=float(np.linalg.norm(x - xdagger)),
        tail_bound=op.tail_bound,
        consistent=consistent,
    )


def oblique_decompose_primal(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    x: CoeffVector,
    rank_tol: float | None = None,
    tol: float = 1e-10,
) -> ObliqueParts:
    """Split `x = v + u` with `v in R(A*_{n,m} A)` and `u in N(A*_{n,m} A)`.

    `v = A_{n,m}^+ A x`. The parts are checked against the normal
    equations: `A_{n,m}^T (A_{n,m} v - Q_m A x)` must vanish.
    """
    x = _check_ambient(op, x, "x")
    pf = factor(op, FX, n, FY, m, rank_tol)
    system = pf.system
    b = (op.matrix @ x)[system.y_indices]
    coeffs = pf.solve(b)
    v = system.embed_x(coeffs)
    u = x - v

    normal = system.matrix.T @ (system.matrix @ coeffs - b)
    scale = max(1.0, float(np.linalg.norm(b)) * (float(pf.singular_values[0]) if pf.rank else 1.0))
    deviation = float(np.linalg.norm(normal)) / scale
    consistent = deviation <= tol
    if not consistent:
        logger.warning(f"Primal decomposition violates the normal equations by {deviation:.3e}")
    return ObliqueParts(v=v, u=u, deviation=deviation, consistent=consistent)


def oblique_decompose_dual(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    x: CoeffVector,
    rank_tol: float | None = None,
    tol: float = 1e-10,
) -> ObliqueParts:
    """Split `x = v_bar + w_bar + q_bar`.

    `v_bar = A^T (A_{n,m}^T)^+ x` lies in `R(A* A_{n,m})`, `w_bar` is the
    orthogonal projection of `x` onto `N(Q_m A) ∩ X_n` and the remainder
    `q_bar` must lie in `X_n^⊥`. A remainder with a visible `X_n` component
    marks the result inconsistent, which usually means the truncation is
    too small.
    """
    x = _check_ambient(op, x, "x")
    pf = factor(op, FX, n, FY, m, rank_tol)
    system = pf.system
    z = pf.solve_adjoint(x[system.x_indices])
    v_bar = op.matrix.T @ system.embed_y(z)
    w_bar = project(intersection_nullspace(op, FX, n, FY, m, rank_tol), x)
    q_bar = x - v_bar - w_bar

    deviation = float(np.linalg.norm(q_bar[system.x_indices])) / max(1.0, float(np.linalg.norm(x)))
    consistent = deviation <= tol
    if not consistent:
        logger.warning(
            f"Dual decomposition remainder has an X_n component of {deviation:.3e} "
            f"at n={n}, m={m}"
        )
    return ObliqueParts(v_bar=v_bar, w_bar=w_bar, q_bar=q_bar, deviation=deviation, consistent=consistent)


def check_cor10(
    op: TruncatedOperator,
    FX: NestedFamily,
    n: Level,
    FY: NestedFamily,
    m: Level,
    k: int,
    trials: int = 5,
    seed: int | None = 0,
    rank_tol: float | None = None,
) -> float:
    """Check the closed forms of `Pi = Pi_{N(Q_m A) ∩ X_n}` on random vectors.

    With `A_k = Q_m A P_k` the identities are
    `P_k Pi = P_k - A_k^* (A_{n,m}^*)^+` and `Pi P_k = P_k - A_{n,m}^+ A_k`.
    `Pi` itself comes from an independent nullspace basis.

    Returns:
        float: The largest deviation over both identities and all trials,
            relative to the norm of the trial vector.

    Raises:
        ValueError: If `k` is not a level at or below `n`.
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive level, got {k!r}")
    if level_key(k) > level_key(n):
        raise ValueError(f"k={k} must not exceed n={n}")

    pf = factor(op, FX, n, FY, m, rank_tol)
    system = pf.system
    W = intersection_nullspace(op, FX, n, FY, m, rank_tol)
    k_indices = FX.indices(k)
    rng = np.random.default_rng(seed)

    def P_k(v: CoeffVector) -> CoeffVector:
        out = np.zeros_like(v)
        out[k_indices] = v[k_indices]
        return out

    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.x_dim)
        scale = float(np.linalg.norm(x))

        z = system.embed_y(pf.solve_adjoint(x[system.x_indices]))
        left = P_k(project(W, x))
        right = P_k(x) - P_k(op.matrix.T @ z)
        worst = max(worst, float(np.linalg.norm(left - right)) / scale)

        left = project(W, P_k(x))
        right = P_k(x) - apply_projected_pinv(pf, op, P_k(x))
        worst = max(worst, float(np.linalg.norm(left - right)) / scale)

    logger.debug(f"Projector identities at n={n}, m={m}, k={k}: max deviation {worst:.3e}")
    return worst
