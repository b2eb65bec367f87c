"""A built-in plugin for ProjLab with the grid operator whose nullspace misses every `X_n`.

The operator acts on coefficients `xi_{ij}` as
`(Ax)_{ij} = xi_{ij} + q^j xi_{i1}` for `j >= 2` and `(Ax)_{i1} = 0`. Its
nullspace is `{x : xi_{ij} = -q^j xi_{i1}}`, which meets no grid corner
`X_n = span{e_{ij} : i, j <= n}` nontrivially, so the projected
least-squares solutions `x_n` of a suitable `x_dagger` oscillate between
two different weak cluster points `u` (even n) and `v` (odd n).

Everything here has a closed form; the scenario compares the numerical
sweep against it.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

import projlab
from projlab.config import OperatorConfig, ScenarioConfig, build_config
from projlab.linalg import orthonormal_nullspace
from projlab.models.base import GridIndexMap, NeubauerParams, ScenarioInfo, SubspaceBasis
from projlab.models.plugins import Plugin, PluginInfo
from projlab.models.scenarios import Scenario
from projlab.operators import check_neubauer_params, make_neubauer

if TYPE_CHECKING:
    from projlab.models.base import TruncatedOperator
    from projlab.models.types import CoeffVector, DenseMatrix

logger = logging.getLogger(__name__)


class NeubauerOracle(NamedTuple):
    """Closed-form data of the grid counterexample."""

    q: float
    c: tuple[float, ...]
    side: int
    zeta: DenseMatrix
    """`side x side` grid of the exact solution, `zeta[i - 1, j - 1] = zeta_{ij}`."""

    @property
    def grid(self) -> GridIndexMap:
        """Index map of the truncation."""
        return GridIndexMap(self.side)

    def c_column(self) -> CoeffVector:
        """`(c_1, ..., c_side)`, zero-padded or cut."""
        return np.array([NeubauerParams(self.q, self.side, self.c).c_at(i) for i in range(1, self.side + 1)])


def _zeta(q: float, c: tuple[float, ...], side: int) -> DenseMatrix:
    p = NeubauerParams(q, side, c)
    check_neubauer_params(p)
    i = np.arange(1, side + 1)[:, None]
    j = np.arange(1, side + 1)[None, :]
    rho = (j % 2 == 0).astype(float)
    r = (j == i + 1).astype(float)
    c_col = np.array([p.c_at(k) for k in range(1, side + 1)])[:, None]
    zeta = q**j / (1.0 - q**2) * (c_col * rho + r)
    # the first column makes each row orthogonal to the nullspace
    zeta[:, 0] = zeta[:, 1:] @ (q ** np.arange(2, side + 1, dtype=float))
    return zeta


def neubauer_xdagger(q: float, c: tuple[float, ...], side: int) -> CoeffVector:
    """The exact solution `x_dagger` on the `side x side` grid, flattened.

    For `j >= 2`, `zeta_{ij} = q^j / (1 - q^2) (c_i rho_j + r_{ij})` with
    `rho_j = 1` for even j and `r_{ij} = 1` iff `j = i + 1`; then
    `zeta_{i1} = sum_{j >= 2} q^j zeta_{ij}` over the stored j, which puts
    the result exactly in `N(A)^⊥` of the truncated operator.

    Raises:
        ValueError: If `q` is outside (0, 1) or `side < 2`.
    """
    return GridIndexMap(side).flatten(_zeta(q, tuple(c), side))


def neubauer_oracle(params: NeubauerParams) -> NeubauerOracle:
    """Precompute the closed forms for a parameter set."""
    return NeubauerOracle(params.q, tuple(params.c), params.side, _zeta(params.q, tuple(params.c), params.side))


def neubauer_e(q: float, n: int) -> float:
    """`e_n = q^2 / (1 - q^4)` for even n and `1 / (1 - q^4)` for odd n."""
    return (q**2 if n % 2 == 0 else 1.0) / (1.0 - q**4)


def neubauer_tail_sum(q: float, n: int, terms: int = 200) -> float:
    """`sum_{j=0}^{terms} q^{2j} rho_{n+1+j}`, the series `e_n` sums in closed form."""
    j = np.arange(terms + 1)
    rho = ((n + 1 + j) % 2 == 0).astype(float)
    return float(np.sum(q ** (2 * j) * rho))


def neubauer_closed_xn(oracle: NeubauerOracle, n: int) -> CoeffVector:
    """Closed-form projected least-squares solution `x_n` on the grid corner `X_n`.

    `xi^n_{i1} = zeta_{i1} + c_i e_n + r_{i,n+1}` and
    `xi^n_{ij} = zeta_{ij} - q^j (xi^n_{i1} - zeta_{i1})` for `i, j <= n`;
    all other coefficients vanish.

    Raises:
        ValueError: If `n` is not in `1..side - 1`.
    """
    if not 1 <= n < oracle.side:
        raise ValueError(f"n must lie in 1..{oracle.side - 1}, got {n}")
    q = oracle.q
    shift = oracle.c_column()[:n] * neubauer_e(q, n)
    shift[n - 1] += 1.0
    block = oracle.zeta[:n, :n].copy()
    block[:, 0] += shift
    block[:, 1:] -= np.outer(shift, q ** np.arange(2, n + 1, dtype=float))

    grid = np.zeros((oracle.side, oracle.side))
    grid[:n, :n] = block
    return oracle.grid.flatten(grid)


def neubauer_limits(oracle: NeubauerOracle) -> tuple[CoeffVector, CoeffVector]:
    """The weak cluster points `u` (even n) and `v` (odd n).

    Both agree with `x_dagger` up to an element of `N(A)`: their first
    column is shifted by `c_i q^2 / (1 - q^4)` resp. `c_i / (1 - q^4)`
    and the rest of row i by `-q^j` times that shift.
    """
    q = oracle.q
    powers = q ** np.arange(1, oracle.side + 1, dtype=float)
    powers[0] = -1.0

    def shifted(scale: float) -> CoeffVector:
        shift = oracle.c_column() * scale
        return oracle.grid.flatten(oracle.zeta - np.outer(shift, powers))

    return shifted(q**2 / (1.0 - q**4)), shifted(1.0 / (1.0 - q**4))


def neubauer_oscillation(oracle: NeubauerOracle, l: int, odd: bool = False) -> tuple[float, float]:
    """Squared distance of `x_n` to the projected cluster point.

    With `odd = False` this is `||x_{2l} - P_{2l} u||^2`, otherwise
    `||x_{2l+1} - P_{2l+1} v||^2`, summed coefficient by coefficient.

    Returns:
        tuple[float, float]: The summed distance and the shortened
            closed form `(q^4 - q^{2n+2}) / (1 - q^2)`. The summed value
            equals `1 + (q^4 - q^{2n+2}) / (1 - q^2)`: the coefficient
            `(n, 1)` contributes the extra 1.
    """
    if l < 1:
        raise ValueError(f"l must be positive, got {l}")
    n = 2 * l + 1 if odd else 2 * l
    u, v = neubauer_limits(oracle)
    reference = oracle.grid.grid(v if odd else u).copy()
    reference[n:, :] = 0.0
    reference[:, n:] = 0.0
    diff = neubauer_closed_xn(oracle, n) - oracle.grid.flatten(reference)
    q = oracle.q
    return float(np.sum(diff**2)), (q**4 - q ** (2 * n + 2)) / (1.0 - q**2)


def _params(cfg: OperatorConfig) -> NeubauerParams:
    defaults = NeubauerParams()
    return NeubauerParams(
        q=cfg.q if cfg.q is not None else defaults.q,
        side=cfg.side if cfg.side is not None else defaults.side,
        c=cfg.c if cfg.c is not None else defaults.c,
    )


class NeubauerScenario(Scenario):
    """The oscillating projected least-squares counterexample."""

    def __init__(self, params: NeubauerParams | None = None) -> None:
        """Initialize the scenario with operator parameters."""
        super().__init__()
        self.params = params or NeubauerParams()

    @classmethod
    def get_scenario_key(cls) -> str:
        """Return the scenario key."""
        return "neubauer"

    @classmethod
    def get_scenario_info(cls) -> ScenarioInfo:
        """Return scenario information."""
        return ScenarioInfo(
            name="Neubauer grid operator",
            description=(
                "Projected least squares on grid corners: bounded, oscillating between "
                "two weak cluster points, and the space condition fails."
            ),
            key=cls.get_scenario_key(),
            version=1,
        )

    def default_config(self) -> ScenarioConfig:
        """Return the default run: grid families, n = 1..12, m = inf."""
        return build_config(
            {
                "name": "neubauer",
                "operator": {
                    "kind": "neubauer",
                    "q": self.params.q,
                    "side": self.params.side,
                    "c": list(self.params.c),
                },
                "sweep": {"n": list(range(1, min(12, self.params.side - 1) + 1)), "m": ["inf"]},
            }
        )

    def build_operator(self, cfg: OperatorConfig) -> TruncatedOperator:
        """Build the grid operator."""
        return make_neubauer(_params(cfg))

    def build_xdagger(self, cfg: ScenarioConfig, op: TruncatedOperator) -> CoeffVector:
        """Build `x_dagger`."""
        p = _params(cfg.operator)
        return neubauer_xdagger(p.q, p.c, p.side)

    def references(
        self, cfg: ScenarioConfig, op: TruncatedOperator, xdagger: CoeffVector
    ) -> dict[str, CoeffVector]:
        """The two weak cluster points."""
        u, v = neubauer_limits(neubauer_oracle(_params(cfg.operator)))
        return {"u": u, "v": v}

    def test_functionals(
        self, cfg: ScenarioConfig, op: TruncatedOperator, xdagger: CoeffVector
    ) -> DenseMatrix | None:
        """Unit functionals along `u - x_dagger` and `v - x_dagger`."""
        rows = []
        for ref in self.references(cfg, op, xdagger).values():
            direction = ref - xdagger
            norm = np.linalg.norm(direction)
            if norm > 0:
                rows.append(direction / norm)
        return np.array(rows) if rows else None

    def nullspace(self, op: TruncatedOperator, rank_tol: float | None = None) -> SubspaceBasis:
        """Nullspace from one diagonal block; all blocks are identical."""
        side = int(round(np.sqrt(op.x_dim)))
        block = orthonormal_nullspace(op.matrix[:side, :side], rank_tol)
        columns = np.zeros((op.x_dim, side * block.dim))
        for i in range(side):
            columns[i * side : (i + 1) * side, i * block.dim : (i + 1) * block.dim] = block.columns
        logger.debug(f"Nullspace of {op.label}: {columns.shape[1]} vectors from {side} blocks")
        return SubspaceBasis(op.x_dim, columns)


def scenario_neubauer(params: NeubauerParams | None = None) -> NeubauerScenario:
    """Return the grid scenario for the given parameters."""
    return NeubauerScenario(params)


class NeubauerPlugin(Plugin):
    """Neubauer Plugin for ProjLab."""

    plugin_info = PluginInfo(
        name="Neubauer",
        description="Grid operator counterexample for projected least squares",
        version=projlab.__version__,
        author="ProjLab developers",
    )

    def __init__(self) -> None:
        """Initialize the plugin."""
        super().__init__()
        self.scenarios = [scenario_neubauer()]

    @classmethod
    def get_info(cls) -> PluginInfo:
        """Return plugin information."""
        return cls.plugin_info

    def get_scenarios(self):
        """Return a list of scenarios for the plugin."""
        return self.scenarios


def register_plugin() -> NeubauerPlugin:
    """Register the plugin with ProjLab."""
    return NeubauerPlugin()
