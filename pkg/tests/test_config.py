"""Tests for scenario configuration parsing."""

import json

import pytest

from projlab.config import (
    ConfigError,
    apply_overrides,
    build_config,
    dump_config,
    load_config,
    parse_config,
)
from projlab.models.helpers import INFINITY


def test_neubauer_defaults():
    """A bare operator kind gets every default."""
    cfg = parse_config('{"operator": {"kind": "neubauer"}}')
    assert cfg.operator.q == 0.5
    assert cfg.operator.side == 60
    assert cfg.operator.c[:2] == (0.5, 0.25)
    assert cfg.discretization.x_family == "grid"
    assert cfg.xdagger.kind == "neubauer-default"
    assert cfg.sweep.n == tuple(range(1, 13))
    assert cfg.sweep.m == (INFINITY,)
    assert cfg.tolerances.cor10 == 1e-8
    assert cfg.output.format == "csv"


def test_du_and_seidman_defaults():
    """Kind-specific truncations and exact solutions."""
    du = build_config({"operator": {"kind": "du"}})
    assert du.operator.K == 24
    assert du.operator.ratio == 0.5
    assert du.xdagger.kind == "du-default"

    seidman = build_config({"operator": {"kind": "seidman"}})
    assert seidman.operator.K == 40
    assert seidman.operator.gamma_decay == 2.0
    assert seidman.operator.beta_decay == 1.0
    assert seidman.sweep.n == tuple(range(1, 21))
    assert seidman.xdagger.kind == "random-in-range-of-adjoint"


def test_q_out_of_range():
    """q must lie strictly between 0 and 1."""
    with pytest.raises(ConfigError, match=r"operator\.q: must lie in the open interval \(0, 1\)"):
        parse_config('{"operator": {"kind": "neubauer", "q": 1.5}}')


def test_missing_kind():
    """The operator kind is the only required key."""
    with pytest.raises(ConfigError, match="missing operator kind"):
        build_config({})


def test_unknown_kind():
    """Unknown operator kinds are listed against the known ones."""
    with pytest.raises(ConfigError, match="must be one of dense-file"):
        build_config({"operator": {"kind": "volterra"}})


def test_non_monotone_levels():
    """Sweep lists must be strictly increasing."""
    with pytest.raises(ConfigError, match="non-monotone"):
        build_config({"operator": {"kind": "du"}, "sweep": {"n": [3, 2]}})


def test_bad_level_values():
    """Levels are positive integers or "inf"."""
    with pytest.raises(ConfigError, match="positive integers"):
        build_config({"operator": {"kind": "du"}, "sweep": {"n": [0]}})
    cfg = build_config({"operator": {"kind": "du"}, "sweep": {"n": [1, "inf"], "m": [2, 4]}})
    assert cfg.sweep.n == (1, INFINITY)
    assert cfg.sweep.points() == [(1, 2), (1, 4), (INFINITY, 2), (INFINITY, 4)]


def test_diagonal_sweep():
    """Diagonal sweeps pair the lists and need equal lengths."""
    cfg = build_config({"operator": {"kind": "du"}, "sweep": {"n": [1, 2], "m": [3, 4], "mode": "diagonal"}})
    assert cfg.sweep.points() == [(1, 3), (2, 4)]
    with pytest.raises(ConfigError, match="equal length"):
        build_config({"operator": {"kind": "du"}, "sweep": {"n": [1, 2], "m": [3], "mode": "diagonal"}})


def test_unknown_keys_rejected():
    """Unknown keys are errors in every block, all reported at once."""
    with pytest.raises(ConfigError) as excinfo:
        build_config(
            {
                "operator": {"kind": "neubauer", "gamma": [1.0]},
                "tolerances": {"strongest": 1.0},
                "colour": "blue",
            }
        )
    errors = excinfo.value.errors
    assert len(errors) == 3
    assert any(e.startswith("operator.gamma: unknown key") for e in errors)
    assert any(e.startswith("tolerances.strongest") for e in errors)
    assert any(e.startswith("config.colour") for e in errors)


def test_default_xdagger_must_match_operator():
    """Gallery exact solutions need their own operator."""
    with pytest.raises(ConfigError, match="neubauer-default needs a neubauer operator"):
        build_config({"operator": {"kind": "du"}, "xdagger": {"kind": "neubauer-default"}})
    with pytest.raises(ConfigError, match="required for coeff-file"):
        build_config({"operator": {"kind": "du"}, "xdagger": {"kind": "coeff-file"}})


def test_dense_file_needs_path():
    """Dense operators are read from a file."""
    with pytest.raises(ConfigError, match="operator.path: required"):
        build_config({"operator": {"kind": "dense-file"}})


def test_du_unit_vector_check():
    """A listed e must be a unit vector of length K."""
    with pytest.raises(ConfigError, match="unit vector"):
        build_config({"operator": {"kind": "du", "e": [1.0, 1.0]}})
    cfg = build_config({"operator": {"kind": "du", "e": [0.6, 0.8]}})
    assert cfg.operator.K == 2


def test_seidman_lists():
    """Listed gamma and beta fix K and must be positive."""
    cfg = build_config({"operator": {"kind": "seidman", "gamma": [1.0, 0.5], "beta": [0.1, 0.2]}})
    assert cfg.operator.K == 2
    assert cfg.operator.gamma_decay is None
    with pytest.raises(ConfigError, match="strictly positive"):
        build_config({"operator": {"kind": "seidman", "gamma": [1.0, 0.0], "beta": [0.1, 0.2]}})
    with pytest.raises(ConfigError, match="square-summable"):
        build_config({"operator": {"kind": "seidman", "beta_decay": 0.5}})


def test_not_json():
    """Malformed text is a config error, not a traceback."""
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config("{operator")


def test_dump_round_trip():
    """Dumped configs parse back to the same config."""
    for kind in ("neubauer", "du", "seidman"):
        cfg = build_config({"operator": {"kind": kind}, "sweep": {"n": [1, 2, "inf"]}})
        assert parse_config(dump_config(cfg)) == cfg


def test_load_config(tmp_path):
    """Scenario files are read as UTF-8 JSON."""
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"name": "small", "operator": {"kind": "du", "K": 6}}), encoding="utf-8")
    cfg = load_config(path)
    assert cfg.name == "small"
    assert cfg.sweep.n == tuple(range(1, 6))


def test_apply_overrides():
    """Command-line overrides replace the sweep, seed, output and tolerances."""
    cfg = build_config({"operator": {"kind": "du"}})
    cfg = apply_overrides(
        cfg,
        tolerances={"strong": "1e-8", "rank_tol": "1e-12"},
        seed=7,
        n=3,
        output_format="json",
    )
    assert cfg.tolerances.strong == 1e-8
    assert cfg.tolerances.rank_tol == 1e-12
    assert cfg.seed == 7
    assert cfg.sweep.points() == [(3, INFINITY)]
    assert cfg.output.format == "json"


def test_apply_overrides_rejects_unknown_tolerance():
    """Unknown tolerance names are listed against the known ones."""
    cfg = build_config({"operator": {"kind": "du"}})
    with pytest.raises(ConfigError, match="--tol strongest: unknown tolerance"):
        apply_overrides(cfg, tolerances={"strongest": "1"})
    with pytest.raises(ConfigError, match="must be positive"):
        apply_overrides(cfg, tolerances={"strong": "-1"})
