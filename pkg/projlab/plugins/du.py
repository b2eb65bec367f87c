"""A built-in plugin for ProjLab with the projector family `I - (., e) e`.

For a unit vector `e` with full support no coordinate subspace `X_n`
(n < K) meets the nullspace `span{e}`. With
`x_dagger = e_1 - (e_1, e) e` the projected solutions are `x_n = e_1`
for every `n < K`: bounded, convergent, and to the wrong limit, with
the error floor `|(e_1, e)|`.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

import projlab
from projlab.config import OperatorConfig, ScenarioConfig, build_config
from projlab.models.base import DuParams, ScenarioInfo
from projlab.models.plugins import Plugin, PluginInfo
from projlab.models.scenarios import Scenario
from projlab.operators import geometric_unit_vector, make_du

if TYPE_CHECKING:
    from projlab.models.base import TruncatedOperator
    from projlab.models.types import CoeffVector


def du_params(cfg: OperatorConfig) -> DuParams:
    """Turn a `du` operator block into parameters."""
    if cfg.e is not None:
        e = cfg.e
    else:
        e = tuple(geometric_unit_vector(cfg.K or 24, cfg.ratio if cfg.ratio is not None else 0.5))
    return DuParams(e=e, tail_bound=cfg.tail_bound or 0.0)


def du_xdagger(p: DuParams) -> CoeffVector:
    """`x_dagger = e_1 - (e_1, e) e`, the projection of `e_1` onto `N(A)^⊥`."""
    e = np.asarray(p.e, dtype=float)
    x = -e[0] * e
    x[0] += 1.0
    return x


class DuScenario(Scenario):
    """Projector onto the orthogonal complement of a unit vector."""

    def __init__(self, params: DuParams | None = None) -> None:
        """Initialize the scenario; without parameters `e` is geometric with ratio 1/2."""
        super().__init__()
        self.params = params

    @classmethod
    def get_scenario_key(cls) -> str:
        """Return the scenario key."""
        return "du"

    @classmethod
    def get_scenario_info(cls) -> ScenarioInfo:
        """Return scenario information."""
        return ScenarioInfo(
            name="Du family",
            description="I - (., e) e: bounded projected solutions with a wrong strong limit.",
            key=cls.get_scenario_key(),
            version=1,
        )

    def default_config(self) -> ScenarioConfig:
        """Return the default run: coordinate families, n = 1..12, m = inf."""
        operator: dict = {"kind": "du"}
        if self.params is not None:
            operator.update(e=list(self.params.e), tail_bound=self.params.tail_bound)
        return build_config({"name": "du", "operator": operator})

    def build_operator(self, cfg: OperatorConfig) -> TruncatedOperator:
        """Build the operator."""
        return make_du(du_params(cfg))

    def build_xdagger(self, cfg: ScenarioConfig, op: TruncatedOperator) -> CoeffVector:
        """Build `e_1 - (e_1, e) e`."""
        return du_xdagger(du_params(cfg.operator))

    def references(
        self, cfg: ScenarioConfig, op: TruncatedOperator, xdagger: CoeffVector
    ) -> dict[str, CoeffVector]:
        """`u = e_1`, the limit the projected solutions settle on."""
        u = np.zeros(op.x_dim)
        u[0] = 1.0
        return {"u": u}


def scenario_du(params: DuParams | None = None) -> DuScenario:
    """Return the Du scenario for the given parameters."""
    return DuScenario(params)


class DuPlugin(Plugin):
    """Du Plugin for ProjLab."""

    plugin_info = PluginInfo(
        name="Du",
        description="Projector family with a wrong strong limit",
        version=projlab.__version__,
        author="ProjLab developers",
    )

    def __init__(self) -> None:
        """Initialize the plugin."""
        super().__init__()
        self.scenarios = [scenario_du()]

    @classmethod
    def get_info(cls) -> PluginInfo:
        """Return plugin information."""
        return cls.plugin_info

    def get_scenarios(self):
        """Return a list of scenarios for the plugin."""
        return self.scenarios


def register_plugin() -> DuPlugin:
    """Register the plugin with ProjLab."""
    return DuPlugin()
