"""A built-in plugin for ProjLab with the diagonal-plus-rank-one family.

`A = diag(gamma) + beta (x) e_1` with a decreasing positive `gamma` and a
square-summable `beta`. Depending on how fast `beta` decays relative to
`gamma`, the projected least-squares solutions stay bounded or their
norms grow along the sweep; the scenario reports the growth and asserts
nothing about it.
"""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING

import numpy as np
import scipy.special

import projlab
from projlab.config import OperatorConfig, ScenarioConfig, build_config
from projlab.models.base import ScenarioInfo, SeidmanParams
from projlab.models.plugins import Plugin, PluginInfo
from projlab.models.scenarios import Scenario
from projlab.operators import make_seidman, random_in_range_of_adjoint

if TYPE_CHECKING:
    from projlab.models.base import TruncatedOperator
    from projlab.models.types import CoeffVector

logger = logging.getLogger(__name__)


def seidman_params(cfg: OperatorConfig) -> SeidmanParams:
    """Turn a `seidman` operator block into parameters.

    Listed `gamma` / `beta` are used as given. Otherwise
    `gamma_k = k^(-gamma_decay)` and `beta_k = k^(-beta_decay)`, and the
    tail quantities follow in closed form: `gamma_{K+1}` directly and
    `sum_{k > K} beta_k^2` as a Hurwitz zeta value.
    """
    K = cfg.K or 40
    k = np.arange(1, K + 1, dtype=float)
    gamma_next, beta_tail_sq = cfg.gamma_next, cfg.beta_tail_sq

    if cfg.gamma is not None:
        gamma = cfg.gamma
    else:
        decay = cfg.gamma_decay if cfg.gamma_decay is not None else 2.0
        gamma = tuple(k**-decay)
        if gamma_next is None:
            gamma_next = float((K + 1) ** -decay)

    if cfg.beta is not None:
        beta = cfg.beta
    else:
        decay = cfg.beta_decay if cfg.beta_decay is not None else 1.0
        beta = tuple(k**-decay)
        if beta_tail_sq is None:
            beta_tail_sq = float(scipy.special.zeta(2.0 * decay, K + 1))

    return SeidmanParams(
        gamma=gamma,
        beta=beta,
        gamma_next=gamma_next,
        beta_tail_sq=beta_tail_sq,
        transpose=bool(cfg.transpose),
    )


class SeidmanScenario(Scenario):
    """Diagonal operator with a rank-one perturbation."""

    def __init__(self, params: SeidmanParams | None = None) -> None:
        """Initialize the scenario; without parameters the decay defaults apply."""
        super().__init__()
        self.params = params

    @classmethod
    def get_scenario_key(cls) -> str:
        """Return the scenario key."""
        return "seidman"

    @classmethod
    def get_scenario_info(cls) -> ScenarioInfo:
        """Return scenario information."""
        return ScenarioInfo(
            name="Seidman family",
            description="diag(gamma) + beta (x) e_1: norm growth of projected least squares.",
            key=cls.get_scenario_key(),
            version=1,
        )

    def default_config(self) -> ScenarioConfig:
        """Return the default run: coordinate families, n = 1..20, m = inf."""
        operator: dict = {"kind": "seidman"}
        if self.params is not None:
            operator.update(
                gamma=list(self.params.gamma),
                beta=list(self.params.beta),
                gamma_next=self.params.gamma_next,
                beta_tail_sq=self.params.beta_tail_sq,
                transpose=self.params.transpose,
            )
        return build_config({"name": "seidman", "operator": operator})

    def build_operator(self, cfg: OperatorConfig) -> TruncatedOperator:
        """Build the operator."""
        return make_seidman(seidman_params(cfg))

    def build_xdagger(self, cfg: ScenarioConfig, op: TruncatedOperator) -> CoeffVector:
        """Seidman runs use a random element of the range of the adjoint."""
        return random_in_range_of_adjoint(op, cfg.seed)


def scenario_seidman(params: SeidmanParams | None = None) -> SeidmanScenario:
    """Return the Seidman scenario for the given parameters."""
    return SeidmanScenario(params)


class SeidmanPlugin(Plugin):
    """Seidman Plugin for ProjLab."""

    plugin_info = PluginInfo(
        name="Seidman",
        description="Diagonal-plus-rank-one operators",
        version=projlab.__version__,
        author="ProjLab developers",
    )

    def __init__(self) -> None:
        """Initialize the plugin."""
        super().__init__()
        self.scenarios = [scenario_seidman()]

    @classmethod
    def get_info(cls) -> PluginInfo:
        """Return plugin information."""
        return cls.plugin_info

    def get_scenarios(self):
        """Return a list of scenarios for the plugin."""
        return self.scenarios


def register_plugin() -> SeidmanPlugin:
    """Register the plugin with ProjLab."""
    return SeidmanPlugin()
