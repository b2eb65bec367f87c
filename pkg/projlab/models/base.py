"""Base models for ProjLab."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any, NamedTuple, Optional

import numpy as np
import polars as pl

from projlab.models.helpers import INFINITY

if TYPE_CHECKING:
    from projlab.models.types import CoeffVector, DenseMatrix, Level


class SvdFactors(NamedTuple):
    """Thin singular value decomposition `M = U diag(s) V^T`."""

    left: DenseMatrix
    singular_values: CoeffVector
    """Non-increasing, non-negative."""
    right: DenseMatrix
    """Columns are the right singular vectors (`V`, not `V^T`)."""


class SubspaceBasis(NamedTuple):
    """Orthonormal basis of a subspace of a coordinate space.

    An empty `columns` array (shape `ambient_dim x 0`) is the zero subspace.
    Only the spanned subspace is meaningful: signs and ordering of the
    columns are arbitrary, so compare projectors rather than bases.
    """

    ambient_dim: int
    columns: DenseMatrix

    @property
    def dim(self) -> int:
        """Dimension of the spanned subspace."""
        return int(self.columns.shape[1])

    @classmethod
    def empty(cls, ambient_dim: int) -> SubspaceBasis:
        """Return the zero subspace of a coordinate space."""
        return cls(ambient_dim, np.zeros((ambient_dim, 0)))


class MinNormSolution(NamedTuple):
    """Minimum-norm least-squares solution of `M x = b`."""

    x: CoeffVector
    singular_values: CoeffVector
    rank: int
    residual: float
    """The residual norm `||M x - b||`."""


class TruncatedOperator(NamedTuple):
    """Finite realization of a bounded operator `A: X -> Y` on basis prefixes."""

    matrix: DenseMatrix
    """`y_dim x x_dim` coefficient matrix."""
    x_dim: int
    y_dim: int
    tail_bound: float = 0.0
    """Advisory estimate of the norm of the discarded part of the operator."""
    label: str = ""


class GridIndexMap(NamedTuple):
    """Row-major bijection between grid indices `(i, j)` and flat indices.

    Grid indices are 1-based as in `e_{ij}`; flat indices are 0-based:
    `flat(i, j) = (i - 1) * side + (j - 1)`. With this ordering a coefficient
    vector reshaped to `(side, side)` holds `xi_{ij}` at `[i - 1, j - 1]`.
    """

    side: int

    @property
    def size(self) -> int:
        """Number of grid cells."""
        return self.side * self.side

    def flat(self, i: int, j: int) -> int:
        """Flat index of `e_{ij}`."""
        if not (1 <= i <= self.side and 1 <= j <= self.side):
            raise ValueError(f"Grid index ({i}, {j}) outside 1..{self.side}")
        return (i - 1) * self.side + (j - 1)

    def unflat(self, k: int) -> tuple[int, int]:
        """Grid index `(i, j)` of a flat index."""
        if not 0 <= k < self.size:
            raise ValueError(f"Flat index {k} outside 0..{self.size - 1}")
        i, j = divmod(k, self.side)
        return i + 1, j + 1

    def grid(self, x: CoeffVector) -> DenseMatrix:
        """View a coefficient vector as a `side x side` array."""
        return np.asarray(x, dtype=float).reshape(self.side, self.side)

    def flatten(self, grid: DenseMatrix) -> CoeffVector:
        """Inverse of `grid`."""
        return np.asarray(grid, dtype=float).reshape(self.size).copy()


class SeidmanParams(NamedTuple):
    """Parameters of the diagonal-plus-rank-one family `diag(gamma) + beta (x) e_1`."""

    gamma: tuple[float, ...]
    """Positive, decreasing diagonal."""
    beta: tuple[float, ...]
    """Square-summable perturbation direction."""
    gamma_next: Optional[float] = None
    """`gamma_{K+1}`, used for the tail bound."""
    beta_tail_sq: Optional[float] = None
    """A bound for `sum_{k > K} beta_k^2`, used for the tail bound."""
    transpose: bool = False
    """Use `(beta, x) e_1` instead of `x_1 beta` for the rank-one term."""

    @property
    def K(self) -> int:
        """Truncation size."""
        return len(self.gamma)


class DuParams(NamedTuple):
    """Parameters of the projector family `I - (., e) e`."""

    e: tuple[float, ...]
    """Unit vector of length K."""
    tail_bound: float = 0.0

    @property
    def K(self) -> int:
        """Truncation size."""
        return len(self.e)


class NeubauerParams(NamedTuple):
    """Parameters of the grid operator with a nullspace missing every `X_n`."""

    q: float = 0.5
    side: int = 60
    c: tuple[float, ...] = tuple(2.0**-i for i in range(1, 11))
    """Finitely supported `(c_1, c_2, ...)`; entries past `side` are ignored."""

    def c_at(self, i: int) -> float:
        """Return `c_i` (1-based), zero outside the support."""
        return self.c[i - 1] if 1 <= i <= len(self.c) else 0.0


class NestedFamily(NamedTuple):
    """Nested coordinate subspaces `X_1 ⊂ X_2 ⊂ ...` of a truncation.

    `schedule[level - 1]` lists the (sorted) ambient indices spanning the
    subspace at `level`. The last level spans every ambient index.
    """

    ambient_dim: int
    schedule: tuple[tuple[int, ...], ...]
    label: str = ""

    @property
    def max_level(self) -> int:
        """Largest finite level."""
        return len(self.schedule)

    def indices(self, level: Level) -> np.ndarray:
        """Ambient indices selected at `level`."""
        if level is INFINITY:
            return np.arange(self.ambient_dim)
        if not isinstance(level, (int, np.integer)) or level < 1:
            raise ValueError(f"Invalid level {level!r} for family {self.label!r}")
        if level > self.max_level:
            raise ValueError(
                f"Level {level} exceeds the truncation of family {self.label!r} "
                f"(max level {self.max_level})"
            )
        return np.asarray(self.schedule[level - 1], dtype=int)


class ProjectedSystem(NamedTuple):
    """The block of `A_{n,m} = Q_m A P_n` between the coordinates of `X_n` and `Y_m`."""

    matrix: DenseMatrix
    """`|Y_m| x |X_n|` slice of the ambient operator."""
    x_indices: np.ndarray
    y_indices: np.ndarray
    n: Level
    m: Level
    x_dim: int
    y_dim: int

    def embed_x(self, coeffs: CoeffVector) -> CoeffVector:
        """Lift `X_n` coordinates to ambient coordinates."""
        out = np.zeros(self.x_dim)
        out[self.x_indices] = coeffs
        return out

    def embed_y(self, coeffs: CoeffVector) -> CoeffVector:
        """Lift `Y_m` coordinates to ambient coordinates."""
        out = np.zeros(self.y_dim)
        out[self.y_indices] = coeffs
        return out


class SolutionRecord(NamedTuple):
    """The discretized solution `x_{n,m}` together with its conditioning."""

    n: Level
    m: Level
    x: CoeffVector
    """Ambient coefficients, supported inside `X_n`."""
    norm: float
    residual: float
    sigma_min: float
    """Smallest nonzero singular value of `A_{n,m}`, 0 for a zero matrix."""
    kappa: float
    """`||A_{n,m}^+|| = 1 / sigma_min`, 0 for a zero matrix."""
    rank: int
    error_to_reference: Optional[float] = None
    tail_bound: float = 0.0
    consistent: bool = True


class ObliqueParts(NamedTuple):
    """The two unique decompositions of an element relative to `A_{n,m}`.

    `x = v + u` with `v in R(A_{n,m}^* A)`, `u in N(A_{n,m}^* A)`, and
    `x = v_bar + w_bar + q_bar` with `v_bar in R(A^* A_{n,m})`,
    `w_bar in N(Q_m A) ∩ X_n`, `q_bar in X_n^⊥`.
    """

    v: Optional[CoeffVector] = None
    u: Optional[CoeffVector] = None
    v_bar: Optional[CoeffVector] = None
    w_bar: Optional[CoeffVector] = None
    q_bar: Optional[CoeffVector] = None
    deviation: float = 0.0
    """Largest relative reconstruction/membership deviation observed."""
    consistent: bool = True


class ConditionReport(NamedTuple):
    """Per-level values of the convergence conditions.

    Every quantity is optional; `None` means "not requested". A ratio that
    does not exist at this level is `math.inf` (then `vaha_ok` is False).
    """

    n: Level
    m: Level
    ubc_proxy: Optional[float] = None
    ubc_tail: Optional[float] = None
    rho_primal: Optional[float] = None
    rho_dual: Optional[float] = None
    rho_condadj: Optional[float] = None
    eta_oneA: Optional[float] = None
    C_threeA: Optional[float] = None
    vaha_ok: Optional[bool] = None
    natterer_value: Optional[float] = None
    luecke_hickey: Optional[float] = None
    simple_global: Optional[float] = None
    simple_local: Optional[float] = None
    thisaa: Optional[float] = None
    wiederwas: Optional[float] = None
    adjoint_dist: Optional[float] = None
    error_bound: Optional[float] = None
    space_dist: Optional[float] = None
    gap: Optional[float] = None
    degenerate: bool = False
    """Set when a range in the angle conditions is the zero subspace."""


class LocalVerdict(NamedTuple):
    """Finite-window verdict on local convergence of a sweep."""

    bounded: bool
    limsup_norm: float
    """Largest `||x_{n,m}||` over the second half of the window."""
    reference_norm: float
    strong_criterion_met: bool
    weak_proxy: tuple[float, ...]
    """Per record: `max_t |(x_{n,m} - x_ref, t)|` over the test functionals."""
    nullspace_drift: tuple[float, ...]
    """Per record: `||Pi_{N(A)} x_{n,m}||`."""


class SpaceConditionProbe(NamedTuple):
    """Distances of nullspace vectors to `N(A) ∩ X_n`."""

    levels: tuple[int, ...]
    distances: DenseMatrix
    """`len(levels) x dim N(A)`; row k holds `dist(z, N(A) ∩ X_{levels[k]})`."""
    intersection_dims: tuple[int, ...]
    nullspace_dim: int
    holds: bool
    """True iff every distance at the last level is below tolerance."""

    @property
    def verdict(self) -> str:
        """`HOLDS` or `FAILS` (at truncation)."""
        return "HOLDS" if self.holds else "FAILS"


class ScenarioInfo(NamedTuple):
    """Class to hold gallery scenario information."""

    name: str
    description: str
    key: str
    version: int


class ProjectedFactors(NamedTuple):
    """Truncated SVD of an assembled block, shared by the solver and the diagnostics.

    Only the `rank` leading singular triplets are kept, so
    `left @ diag(singular_values) @ right.T` is the numerical `A_{n,m}`.
    """

    system: ProjectedSystem
    left: DenseMatrix
    singular_values: CoeffVector
    """The nonzero singular values, non-increasing."""
    right: DenseMatrix

    @property
    def rank(self) -> int:
        """Numerical rank of the block."""
        return int(self.singular_values.size)

    @property
    def sigma_min(self) -> float:
        """Smallest nonzero singular value, 0 for a zero block."""
        return float(self.singular_values[-1]) if self.rank else 0.0

    @property
    def kappa(self) -> float:
        """`||A_{n,m}^+||`, 0 for a zero block."""
        return 1.0 / self.sigma_min if self.rank else 0.0

    def solve(self, b: CoeffVector) -> CoeffVector:
        """Apply `A_{n,m}^+` to `Y_m` coordinates, giving `X_n` coordinates."""
        return self.right @ ((self.left.T @ b) / self.singular_values)

    def solve_adjoint(self, x: CoeffVector) -> CoeffVector:
        """Apply `(A_{n,m}^T)^+` to `X_n` coordinates, giving `Y_m` coordinates."""
        return self.left @ ((self.right.T @ x) / self.singular_values)

    def pinv(self) -> DenseMatrix:
        """The assembled `|X_n| x |Y_m|` pseudoinverse."""
        return (self.right / self.singular_values) @ self.left.T


class AngleConditions(NamedTuple):
    """Norms of the projector products behind the angle conditions."""

    rho_primal: float
    """`||Pi_{N(A*_{n,m} A)} Pi_{R(A*_{n,m} A)}||`."""
    rho_dual: float
    """`||Pi_{N(A* A_{n,m})} Pi_{R(A* A_{n,m})}||`."""
    rho_condadj: float
    """`||(I - P_n) Pi_{R(A* A_{n,m})}||`."""
    degenerate: bool = False


class RatioBounds(NamedTuple):
    """Suprema of `||Bz|| / ||Mz||` and `||Bz|| / ||Dz||` for `M = [D; B]`."""

    eta: float
    C: float
    """`math.inf` when `N(D)` is not contained in `N(B)`."""
    finite: bool


class RatioConditions(NamedTuple):
    """The rewritten ratio conditions at one level."""

    eta_oneA: float
    C_threeA: float
    vaha_ok: bool


class SimpleProducts(NamedTuple):
    """The product-type sufficient conditions at one level."""

    simple_global: float
    """`||A (I - P_n)|| ||A_{n,m}^+||`."""
    simple_local: Optional[float]
    """`||A (I - P_n) x|| ||A_{n,m}^+||`, None without an element."""
    thisaa: float
    """`||(I - P_n) A* Q_m|| ||A_{n,m}^+||`."""


class SweepRow(NamedTuple):
    """One row of the sweep table.

    Levels are strings so that `inf` survives every output format. Absent
    quantities are None and come out as empty CSV fields.
    """

    n: str
    m: str
    norm_x: Optional[float] = None
    err_to_xdagger: Optional[float] = None
    err_to_u: Optional[float] = None
    err_to_v: Optional[float] = None
    sigma_min: Optional[float] = None
    kappa: Optional[float] = None
    ubc_proxy: Optional[float] = None
    rho_primal: Optional[float] = None
    rho_dual: Optional[float] = None
    rho_condadj: Optional[float] = None
    eta_oneA: Optional[float] = None
    C_threeA: Optional[float] = None
    natterer: Optional[float] = None
    luecke_hickey: Optional[float] = None
    space_dist_max: Optional[float] = None
    weak_proxy_max: Optional[float] = None
    residual: Optional[float] = None
    rank: Optional[int] = None
    ubc_tail: Optional[float] = None
    simple_global: Optional[float] = None
    simple_local: Optional[float] = None
    thisaa: Optional[float] = None
    wiederwas: Optional[float] = None
    adjoint_dist: Optional[float] = None
    error_bound: Optional[float] = None
    gap: Optional[float] = None
    inconsistent: bool = False

    @classmethod
    def get_polars_schema(cls) -> pl.Schema:
        """Get the Polars schema of the sweep table."""
        types = {"n": pl.String(), "m": pl.String(), "rank": pl.Int64(), "inconsistent": pl.Boolean()}
        return pl.Schema({name: types.get(name, pl.Float64()) for name in cls._fields})


class SweepResult(NamedTuple):
    """Everything a sweep produces."""

    table: pl.DataFrame
    """One `SweepRow` per sweep point, in sweep order."""
    summary: dict[str, Any]
    """Verdicts over the computed window."""
    metadata: dict[str, Any]
    """Config hash, truncation, tolerances and tail bounds."""
    inconsistent: bool
    """True if any sweep point was flagged or failed."""
