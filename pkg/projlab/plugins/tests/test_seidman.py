"""Tests for the `seidman` plugin."""

import math

import numpy as np
import pytest

from projlab.config import build_config
from projlab.models.plugins import Plugin, PluginInfo
from projlab.plugins import seidman


def test_register_plugin():
    """Test the register_plugin function."""
    plugin = seidman.register_plugin()
    assert isinstance(plugin, Plugin)
    assert isinstance(plugin.get_info(), PluginInfo)
    assert [s.get_scenario_key() for s in plugin.get_scenarios()] == ["seidman"]


def test_default_params():
    """`gamma_k = k^-2`, `beta_k = 1/k`, with tails in closed form."""
    p = seidman.seidman_params(build_config({"operator": {"kind": "seidman"}}).operator)
    assert p.K == 40
    assert p.gamma[1] == pytest.approx(0.25)
    assert p.beta[3] == pytest.approx(0.25)
    assert p.gamma_next == pytest.approx(41.0**-2)
    expected = math.pi**2 / 6 - math.fsum(k**-2.0 for k in range(1, 41))
    assert p.beta_tail_sq == pytest.approx(expected, rel=1e-10)
    assert not p.transpose


def test_listed_values_are_kept():
    """Listed vectors and tails are used as given."""
    cfg = build_config(
        {
            "operator": {
                "kind": "seidman",
                "gamma": [1.0, 0.5],
                "beta": [0.0, 1.0],
                "gamma_next": 0.1,
                "beta_tail_sq": 0.0,
                "transpose": True,
            }
        }
    )
    p = seidman.seidman_params(cfg.operator)
    assert p.gamma == (1.0, 0.5)
    assert p.beta_tail_sq == 0.0
    assert p.transpose


def test_scenario_builds_operator_and_xdagger():
    """The exact solution is a seeded unit vector in the range of the adjoint."""
    scenario = seidman.scenario_seidman()
    cfg = build_config({"operator": {"kind": "seidman", "K": 12}, "seed": 5})
    op = scenario.build_operator(cfg.operator)
    assert op.matrix.shape == (12, 12)
    assert op.tail_bound == pytest.approx(max(13.0**-2, math.sqrt(seidman.seidman_params(cfg.operator).beta_tail_sq)))
    xdagger = scenario.build_xdagger(cfg, op)
    assert np.linalg.norm(xdagger) == pytest.approx(1.0)
    np.testing.assert_array_equal(xdagger, scenario.build_xdagger(cfg, op))
