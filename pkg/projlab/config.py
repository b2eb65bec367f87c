"""Scenario configuration: JSON files, validation and defaults.

A scenario file is a JSON object with the blocks `operator`,
`discretization`, `xdagger`, `sweep`, `diagnostics`, `tolerances` and
`output`, plus an optional top-level `name` and `seed`. Only `operator.kind`
is required; every other value has a default that depends on the kind.
Unknown keys are rejected everywhere, and all problems are collected
before a single `ConfigError` is raised.

Levels are positive integers or the string `"inf"`.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Any, NamedTuple, Optional

from projlab.diagnostics import DIAGNOSTICS
from projlab.models.helpers import INFINITY, level_key

if TYPE_CHECKING:
    from projlab.models.types import Level

logger = logging.getLogger(__name__)

OPERATOR_KINDS = ("dense-file", "seidman", "du", "neubauer")
FAMILY_KINDS = ("coordinate", "grid")
XDAGGER_KINDS = ("neubauer-default", "du-default", "coeff-file", "random-in-range-of-adjoint")
FORMATS = ("csv", "json")
SWEEP_MODES = ("product", "diagonal")

_OPERATOR_KEYS = {
    "dense-file": ("path",),
    "neubauer": ("q", "side", "c"),
    "seidman": (
        "K",
        "gamma",
        "beta",
        "gamma_decay",
        "beta_decay",
        "gamma_next",
        "beta_tail_sq",
        "transpose",
    ),
    "du": ("K", "ratio", "e", "tail_bound"),
}

_OPERATOR_DEFAULTS: dict[str, dict[str, Any]] = {
    "dense-file": {},
    "neubauer": {"q": 0.5, "side": 60, "c": tuple(2.0**-i for i in range(1, 11))},
    "seidman": {"K": 40, "transpose": False},
    "du": {"K": 24, "tail_bound": 0.0},
}

_DEFAULT_XDAGGER = {
    "dense-file": "random-in-range-of-adjoint",
    "neubauer": "neubauer-default",
    "seidman": "random-in-range-of-adjoint",
    "du": "du-default",
}


class ConfigError(ValueError):
    """Raised when a scenario configuration is invalid.

    Attributes:
        errors (list[str]): Every problem found, one message per entry.
    """

    def __init__(self, errors: list[str]) -> None:
        """Initialize the error with the collected messages."""
        self.errors = list(errors)
        super().__init__("Invalid configuration:\n  " + "\n  ".join(self.errors))


class OperatorConfig(NamedTuple):
    """The `operator` block.

    Only the keys of the selected kind may be set; the others stay None.
    """

    kind: str
    path: Optional[str] = None
    """Whitespace-separated matrix file (`dense-file`)."""
    q: Optional[float] = None
    side: Optional[int] = None
    c: Optional[tuple[float, ...]] = None
    K: Optional[int] = None
    """Truncation size (`seidman`, `du`)."""
    gamma: Optional[tuple[float, ...]] = None
    beta: Optional[tuple[float, ...]] = None
    gamma_decay: Optional[float] = None
    """`gamma_k = k^(-gamma_decay)` when `gamma` is not listed. Defaults to 2."""
    beta_decay: Optional[float] = None
    """`beta_k = k^(-beta_decay)` when `beta` is not listed. Defaults to 1."""
    gamma_next: Optional[float] = None
    beta_tail_sq: Optional[float] = None
    transpose: Optional[bool] = None
    ratio: Optional[float] = None
    """`e` proportional to `(1, ratio, ratio^2, ...)` when `e` is not listed. Defaults to 0.5."""
    e: Optional[tuple[float, ...]] = None
    tail_bound: Optional[float] = None


class DiscretizationConfig(NamedTuple):
    """The `discretization` block."""

    x_family: str = "coordinate"
    x_step: int = 1
    """Coordinates added per level (`coordinate` families only)."""
    y_family: str = "coordinate"
    y_step: int = 1


class XdaggerConfig(NamedTuple):
    """The `xdagger` block."""

    kind: str
    path: Optional[str] = None
    """Coefficient file for `coeff-file`."""


class SweepConfig(NamedTuple):
    """The `sweep` block.

    `mode = "product"` runs every `(n, m)` pair; `"diagonal"` pairs the
    lists entry by entry.
    """

    n: tuple[Level, ...]
    m: tuple[Level, ...] = (INFINITY,)
    mode: str = "product"

    def points(self) -> list[tuple[Level, Level]]:
        """The sweep points, n-major then m."""
        if self.mode == "diagonal":
            return list(zip(self.n, self.m))
        return [(n, m) for n in self.n for m in self.m]


class DiagnosticsConfig(NamedTuple):
    """The `diagnostics` block: one toggle per diagnostic."""

    ubc: bool = True
    angles: bool = True
    ratios: bool = True
    natterer: bool = True
    luecke_hickey: bool = True
    simple: bool = True
    wiederwas: bool = True
    adjoint_dist: bool = True
    error_bound: bool = True
    gap: bool = False
    space: bool = True
    """Run the space-condition probe up to the largest finite n."""
    local: bool = True
    """Classify the sweep with the local-convergence criteria."""
    oblique: bool = True
    """Check both oblique decompositions and the projector identities."""
    ubc_K: Optional[int] = None
    """Restrict the uniform-boundedness proxy to the first K coordinates."""
    weak_functionals: int = 25
    """Number of coordinate functionals in the weak-convergence proxy."""

    def requested(self) -> frozenset[str]:
        """Names of the per-level diagnostics that are switched on."""
        return frozenset(name for name in DIAGNOSTICS if getattr(self, name))


class Tolerances(NamedTuple):
    """Numerical tolerances. All are overridable with `--tol NAME=VALUE`."""

    rank_tol: Optional[float] = None
    """Relative rank threshold; None means `eps * max(rows, cols)`."""
    reconstruction: float = 1e-10
    nullspace: float = 1e-10
    space: float = 1e-10
    strong: float = 1e-6
    cor10: float = 1e-8
    bound_factor: float = 100.0
    cor10_trials: int = 5


class OutputConfig(NamedTuple):
    """The `output` block."""

    format: str = "csv"
    path: Optional[str] = None
    """Output file; None writes to standard output."""


class ScenarioConfig(NamedTuple):
    """A complete, validated scenario."""

    operator: OperatorConfig
    discretization: DiscretizationConfig
    xdagger: XdaggerConfig
    sweep: SweepConfig
    diagnostics: DiagnosticsConfig = DiagnosticsConfig()
    tolerances: Tolerances = Tolerances()
    output: OutputConfig = OutputConfig()
    name: str = ""
    seed: int = 0


def _default_sweep(operator: OperatorConfig) -> dict[str, Any]:
    if operator.kind == "neubauer":
        top = min(12, operator.side or 60)
    elif operator.kind == "du":
        top = max(1, min(12, (operator.K or 2) - 1))
    elif operator.kind == "seidman":
        top = min(20, operator.K or 1)
    else:
        top = 1
    return {"n": list(range(1, top + 1)), "m": ["inf"], "mode": "product"}


class _Validator:
    """Collects errors while reading one JSON block."""

    def __init__(self, errors: list[str], block: str, data: Any) -> None:
        self.errors = errors
        self.block = block
        if not isinstance(data, Mapping):
            self.error(f"must be an object, got {type(data).__name__}")
            data = {}
        self.data = data

    def error(self, message: str, key: str | None = None) -> None:
        where = f"{self.block}.{key}" if key else self.block
        self.errors.append(f"{where}: {message}")

    def reject_unknown(self, allowed: tuple[str, ...]) -> None:
        for key in self.data:
            if key not in allowed:
                self.error(f"unknown key (allowed: {', '.join(allowed)})", key)

    def number(self, key: str, default: Any = None, *, positive: bool = False) -> Any:
        value = self.data.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.error(f"must be a number, got {value!r}", key)
            return default
        if not math.isfinite(value):
            self.error("must be finite", key)
            return default
        if positive and value <= 0:
            self.error(f"must be positive, got {value}", key)
        return float(value)

    def integer(self, key: str, default: Any = None, *, minimum: int = 1) -> Any:
        value = self.data.get(key, default)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            self.error(f"must be an integer, got {value!r}", key)
            return default
        if value < minimum:
            self.error(f"must be at least {minimum}, got {value}", key)
        return value

    def boolean(self, key: str, default: Any = None) -> Any:
        value = self.data.get(key, default)
        if value is not None and not isinstance(value, bool):
            self.error(f"must be true or false, got {value!r}", key)
            return default
        return value

    def choice(self, key: str, choices: tuple[str, ...], default: Any = None) -> Any:
        value = self.data.get(key, default)
        if value is None:
            return None
        if value not in choices:
            self.error(f"must be one of {', '.join(choices)}, got {value!r}", key)
            return default
        return value

    def string(self, key: str, default: Any = None) -> Any:
        value = self.data.get(key, default)
        if value is not None and not isinstance(value, str):
            self.error(f"must be a string, got {value!r}", key)
            return default
        return value

    def vector(self, key: str, default: Any = None) -> Any:
        value = self.data.get(key, default)
        if value is None:
            return None
        if (
            not isinstance(value, (list, tuple))
            or not value
            or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
                for v in value
            )
        ):
            self.error("must be a non-empty list of finite numbers", key)
            return default
        return tuple(float(v) for v in value)

    def levels(self, key: str, default: Any) -> tuple[Level, ...]:
        value = self.data.get(key, default)
        if not isinstance(value, (list, tuple)) or not value:
            self.error("must be a non-empty list of levels", key)
            return ()
        levels: list[Level] = []
        for item in value:
            if item == "inf":
                levels.append(INFINITY)
            elif isinstance(item, int) and not isinstance(item, bool) and item >= 1:
                levels.append(item)
            else:
                self.error(f'levels are positive integers or "inf", got {item!r}', key)
                return ()
        keys = [level_key(level) for level in levels]
        if any(b <= a for a, b in zip(keys, keys[1:])):
            self.error("levels must be strictly increasing (non-monotone sweep list)", key)
        return tuple(levels)


def _parse_operator(errors: list[str], data: Any) -> OperatorConfig:
    v = _Validator(errors, "operator", data)
    kind = v.data.get("kind")
    if kind is None:
        v.error("missing operator kind", "kind")
        return OperatorConfig(kind="")
    if kind not in OPERATOR_KINDS:
        v.error(f"must be one of {', '.join(OPERATOR_KINDS)}, got {kind!r}", "kind")
        return OperatorConfig(kind=str(kind))
    v.reject_unknown(("kind", *_OPERATOR_KEYS[kind]))
    defaults = _OPERATOR_DEFAULTS[kind]
    values: dict[str, Any] = {"kind": kind}

    if kind == "dense-file":
        values["path"] = v.string("path")
        if values["path"] is None:
            v.error("required for dense-file operators", "path")
    elif kind == "neubauer":
        q = v.number("q", defaults["q"])
        if q is not None and not 0.0 < q < 1.0:
            v.error(f"must lie in the open interval (0, 1), got {q}", "q")
        values["q"] = q
        values["side"] = v.integer("side", defaults["side"], minimum=2)
        values["c"] = v.vector("c", defaults["c"])
    elif kind == "seidman":
        values["gamma"] = v.vector("gamma")
        values["beta"] = v.vector("beta")
        listed = values["gamma"] or values["beta"]
        values["K"] = v.integer("K", len(listed) if listed else defaults["K"])
        if values["gamma"] is None:
            values["gamma_decay"] = v.number("gamma_decay", 2.0, positive=True)
        if values["beta"] is None:
            decay = v.number("beta_decay", 1.0)
            if decay is not None and decay <= 0.5:
                v.error(f"must exceed 0.5 for a square-summable beta, got {decay}", "beta_decay")
            values["beta_decay"] = decay
        for key in ("gamma", "beta"):
            if values[key] is not None and len(values[key]) != values["K"]:
                v.error(f"must have K = {values['K']} entries, got {len(values[key])}", key)
        if values["gamma"] is not None and any(g <= 0 for g in values["gamma"]):
            v.error("entries must be strictly positive", "gamma")
        values["gamma_next"] = v.number("gamma_next")
        beta_tail_sq = v.number("beta_tail_sq")
        if beta_tail_sq is not None and beta_tail_sq < 0:
            v.error(f"must be non-negative, got {beta_tail_sq}", "beta_tail_sq")
        values["beta_tail_sq"] = beta_tail_sq
        values["transpose"] = v.boolean("transpose", defaults["transpose"])
    else:
        values["e"] = v.vector("e")
        values["K"] = v.integer("K", len(values["e"]) if values["e"] else defaults["K"])
        if values["e"] is None:
            ratio = v.number("ratio", 0.5)
            if ratio is not None and not 0.0 < abs(ratio) < 1.0:
                v.error(f"must satisfy 0 < |ratio| < 1, got {ratio}", "ratio")
            values["ratio"] = ratio
        else:
            if len(values["e"]) != values["K"]:
                v.error(f"must have K = {values['K']} entries, got {len(values['e'])}", "e")
            if abs(math.fsum(x * x for x in values["e"]) - 1.0) > 1e-12:
                v.error("must be a unit vector", "e")
        values["tail_bound"] = v.number("tail_bound", defaults["tail_bound"])
    return OperatorConfig(**values)


def _parse_discretization(errors: list[str], data: Any, kind: str) -> DiscretizationConfig:
    family = "grid" if kind == "neubauer" else "coordinate"
    v = _Validator(errors, "discretization", data)
    v.reject_unknown(DiscretizationConfig._fields)
    return DiscretizationConfig(
        x_family=v.choice("x_family", FAMILY_KINDS, family),
        x_step=v.integer("x_step", 1),
        y_family=v.choice("y_family", FAMILY_KINDS, family),
        y_step=v.integer("y_step", 1),
    )


def _parse_xdagger(errors: list[str], data: Any, kind: str) -> XdaggerConfig:
    v = _Validator(errors, "xdagger", data)
    v.reject_unknown(XdaggerConfig._fields)
    xkind = v.choice("kind", XDAGGER_KINDS, _DEFAULT_XDAGGER.get(kind, "coeff-file"))
    path = v.string("path")
    if xkind == "coeff-file" and path is None:
        v.error("required for coeff-file", "path")
    if xkind == "neubauer-default" and kind != "neubauer":
        v.error("neubauer-default needs a neubauer operator", "kind")
    if xkind == "du-default" and kind != "du":
        v.error("du-default needs a du operator", "kind")
    return XdaggerConfig(kind=xkind, path=path)


def _parse_sweep(errors: list[str], data: Any, defaults: dict[str, Any]) -> SweepConfig:
    v = _Validator(errors, "sweep", data)
    v.reject_unknown(SweepConfig._fields)
    n = v.levels("n", defaults["n"])
    m = v.levels("m", defaults["m"])
    mode = v.choice("mode", SWEEP_MODES, defaults["mode"])
    if mode == "diagonal" and n and m and len(n) != len(m):
        v.error(f"diagonal sweeps need lists of equal length, got {len(n)} and {len(m)}", "mode")
    return SweepConfig(n=n, m=m, mode=mode)


def _parse_diagnostics(errors: list[str], data: Any) -> DiagnosticsConfig:
    v = _Validator(errors, "diagnostics", data)
    v.reject_unknown(DiagnosticsConfig._fields)
    defaults = DiagnosticsConfig()
    toggles = {
        name: v.boolean(name, getattr(defaults, name))
        for name in DiagnosticsConfig._fields
        if isinstance(getattr(defaults, name), bool)
    }
    return DiagnosticsConfig(
        **toggles,
        ubc_K=v.integer("ubc_K"),
        weak_functionals=v.integer("weak_functionals", defaults.weak_functionals, minimum=0),
    )


def _parse_tolerances(errors: list[str], data: Any) -> Tolerances:
    v = _Validator(errors, "tolerances", data)
    v.reject_unknown(Tolerances._fields)
    defaults = Tolerances()
    values: dict[str, Any] = {"rank_tol": v.number("rank_tol", None)}
    if values["rank_tol"] is not None and values["rank_tol"] < 0:
        v.error(f"must be non-negative, got {values['rank_tol']}", "rank_tol")
    for name in ("reconstruction", "nullspace", "space", "strong", "cor10", "bound_factor"):
        values[name] = v.number(name, getattr(defaults, name), positive=True)
    values["cor10_trials"] = v.integer("cor10_trials", defaults.cor10_trials)
    return Tolerances(**values)


def _parse_output(errors: list[str], data: Any) -> OutputConfig:
    v = _Validator(errors, "output", data)
    v.reject_unknown(OutputConfig._fields)
    return OutputConfig(format=v.choice("format", FORMATS, "csv"), path=v.string("path"))


def build_config(data: Mapping[str, Any]) -> ScenarioConfig:
    """Validate a decoded scenario tree and fill in the defaults.

    Raises:
        ConfigError: With every validation problem found.
    """
    errors: list[str] = []
    top = _Validator(errors, "config", data)
    top.reject_unknown(ScenarioConfig._fields)

    operator = _parse_operator(errors, top.data.get("operator", {}))
    kind = operator.kind
    cfg = ScenarioConfig(
        operator=operator,
        discretization=_parse_discretization(errors, top.data.get("discretization", {}), kind),
        xdagger=_parse_xdagger(errors, top.data.get("xdagger", {}), kind),
        sweep=_parse_sweep(errors, top.data.get("sweep", {}), _default_sweep(operator)),
        diagnostics=_parse_diagnostics(errors, top.data.get("diagnostics", {})),
        tolerances=_parse_tolerances(errors, top.data.get("tolerances", {})),
        output=_parse_output(errors, top.data.get("output", {})),
        name=top.string("name", "") or "",
        seed=top.integer("seed", 0, minimum=0),
    )
    if errors:
        raise ConfigError(errors)
    logger.debug(f"Parsed configuration for a {kind} operator")
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate a JSON scenario.

    Raises:
        ConfigError: If the text is not JSON or the scenario is invalid.

    Examples:
        >>> parse_config('{"operator": {"kind": "neubauer"}}').operator.q
        0.5
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config: not valid JSON ({exc})"]) from exc
    return build_config(data)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and parse a scenario file."""
    logger.info(f"Loading scenario from {path}")
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _plain(value: Any) -> Any:
    if value is INFINITY:
        return str(value)
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Convert a config to plain JSON data; unset operator keys are omitted."""
    data: dict[str, Any] = {"name": cfg.name, "seed": cfg.seed}
    for block in ScenarioConfig._fields:
        value = getattr(cfg, block)
        if not isinstance(value, tuple):
            continue
        data[block] = {
            key: _plain(item)
            for key, item in value._asdict().items()
            if not (block == "operator" and item is None)
        }
    return data


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize a config to JSON, defaults included; `parse_config` inverts it."""
    return json.dumps(config_to_dict(cfg), indent=2)


def apply_overrides(
    cfg: ScenarioConfig,
    tolerances: Mapping[str, str] | None = None,
    seed: int | None = None,
    n: Level | None = None,
    m: Level | None = None,
    output_format: str | None = None,
    output_path: str | None = None,
) -> ScenarioConfig:
    """Apply command-line overrides and re-validate.

    Tolerance values are strings as typed on the command line; `null`
    resets `rank_tol` to its default.

    Raises:
        ConfigError: If an override names an unknown tolerance or has an
            invalid value.
    """
    data = config_to_dict(cfg)
    errors: list[str] = []
    for name, text in (tolerances or {}).items():
        if name not in Tolerances._fields:
            errors.append(f"--tol {name}: unknown tolerance (known: {', '.join(Tolerances._fields)})")
            continue
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            errors.append(f"--tol {name}: {text!r} is not a number")
            continue
        data["tolerances"][name] = value
    if errors:
        raise ConfigError(errors)
    if seed is not None:
        data["seed"] = seed
    if n is not None or m is not None:
        data["sweep"] = {
            "n": [_plain(n if n is not None else cfg.sweep.n[0])],
            "m": [_plain(m if m is not None else cfg.sweep.m[0])],
            "mode": "product",
        }
    if output_format is not None:
        data["output"]["format"] = output_format
    if output_path is not None:
        data["output"]["path"] = output_path
    return build_config(data)
