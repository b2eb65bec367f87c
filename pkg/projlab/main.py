"""Numerical laboratory for regularization by projection."""

from __future__ import annotations

import importlib
import logging
import math
import os
import pkgutil
from collections.abc import Iterable
from concurrent.futures import Future, ThreadPoolExecutor
from typing import TYPE_CHECKING, NamedTuple, Optional

import numpy as np
import polars as pl

import projlab.plugins as _local_plugins
from projlab.config import ScenarioConfig, Tolerances
from projlab.diagnostics import (
    classify_local,
    condition_report,
    default_test_functionals,
    operator_nullspace,
    space_condition_probe,
)
from projlab.discretization import coordinate_family, grid_family
from projlab.models.base import (
    ConditionReport,
    ScenarioInfo,
    SolutionRecord,
    SweepResult,
    SweepRow,
)
from projlab.models.helpers import INFINITY
from projlab.models.plugins import Plugin
from projlab.models.scenarios import Scenario
from projlab.operators import make_dense, random_in_range_of_adjoint
from projlab.solve import check_cor10, oblique_decompose_dual, oblique_decompose_primal, solve_projected
from projlab.utils import config_hash, load_coefficients, load_matrix

if TYPE_CHECKING:
    from projlab.config import DiscretizationConfig
    from projlab.models.base import NestedFamily, SubspaceBasis, TruncatedOperator
    from projlab.models.types import CoeffVector, DenseMatrix, Level

logger = logging.getLogger(__name__)


def _import_plugin(name: str) -> Plugin | None:
    """Import a plugin by name."""
    try:
        module = importlib.import_module(name)
        if hasattr(module, "register_plugin"):
            plugin = module.register_plugin()
            if isinstance(plugin, Plugin):
                return plugin
            else:
                logger.warning(f"Plugin {name} does not inherit from Plugin class")
        else:
            logger.warning(f"Plugin {name} does not have register_plugin() method")
    except ImportError:
        logger.exception(f"Failed to import plugin {name}")
    return None


def _import_local_plugins() -> Iterable[Plugin]:
    """Import all local plugins."""
    return filter(
        None,
        (
            _import_plugin(name)
            for _, name, ispkg in pkgutil.iter_modules(_local_plugins.__path__, "projlab.plugins.")
            if not ispkg
        ),
    )


class PreparedScenario(NamedTuple):
    """A config turned into concrete objects, ready to sweep."""

    cfg: ScenarioConfig
    op: TruncatedOperator
    FX: NestedFamily
    FY: NestedFamily
    xdagger: CoeffVector
    references: dict[str, CoeffVector]
    functionals: DenseMatrix
    scenario: Optional[Scenario] = None


class PointResult(NamedTuple):
    """Solution and diagnostics at one sweep point."""

    n: Level
    m: Level
    record: Optional[SolutionRecord]
    report: Optional[ConditionReport]
    inconsistent: bool


def build_family(kind: str, step: int, ambient_dim: int) -> NestedFamily:
    """Build a nested family of a configured kind over `ambient_dim` coordinates.

    Raises:
        ValueError: If a grid family is requested on a non-square truncation.
    """
    if kind == "grid":
        side = math.isqrt(ambient_dim)
        if side * side != ambient_dim:
            raise ValueError(f"A grid family needs a square number of coordinates, got {ambient_dim}")
        return grid_family(side)
    return coordinate_family(ambient_dim, step)


def _families(cfg: DiscretizationConfig, op: TruncatedOperator) -> tuple[NestedFamily, NestedFamily]:
    return (
        build_family(cfg.x_family, cfg.x_step, op.x_dim),
        build_family(cfg.y_family, cfg.y_step, op.y_dim),
    )


class Laboratory:
    """Entry point of ProjLab: gallery scenarios and sweeps."""

    def __init__(self) -> None:
        """Initialize the Laboratory class."""
        logger.debug("Initializing Laboratory")
        self.plugins: list[Plugin] = []
        for plugin in _import_local_plugins():
            logger.debug(f"Loaded plugin: {plugin.get_info()}")
            self.plugins.append(plugin)
        logger.debug(f"Loaded {len(self.plugins)} plugins")

    def register_plugin(self, plugin: Plugin):
        """Register a custom plugin.

        Raises:
            TypeError: If `plugin` is not a Plugin.
            ValueError: If one of its scenario keys is already registered.
        """
        if not isinstance(plugin, Plugin):
            raise TypeError("Plugin must be an instance of Plugin class")
        taken = {key for registered in self.plugins for key in registered.scenario_keys()}
        clashes = sorted(taken.intersection(plugin.scenario_keys()))
        if clashes:
            raise ValueError(f"Scenario keys already registered: {', '.join(clashes)}")
        self.plugins.append(plugin)
        logger.info(f"Registered plugin: {plugin.get_info()}")

    def _get_scenarios(self, scenario_keys: list[str] | None = None) -> Iterable[Scenario]:
        """Get the scenarios from all plugins."""
        for plugin in self.plugins:
            for scenario in plugin.get_scenarios():
                if scenario_keys is None or scenario.get_scenario_key() in scenario_keys:
                    yield scenario

    def get_scenarios(self, scenario_keys: list[str] | None = None) -> Iterable[ScenarioInfo]:
        """Get information on the registered gallery scenarios.

        Args:
            scenario_keys (list[str] | None): Only return these keys.
                Defaults to None, which returns every scenario.

        Returns:
            Iterable[ScenarioInfo]: An iterable of ScenarioInfo objects.
        """
        return map(lambda scenario: scenario.get_scenario_info(), self._get_scenarios(scenario_keys))

    def get_scenario(self, key: str) -> Scenario:
        """Return the scenario registered under `key`.

        Raises:
            ValueError: If no plugin provides the key.
        """
        for plugin in self.plugins:
            scenario = plugin.find_scenario(key)
            if scenario is not None:
                return scenario
        known = ", ".join(k for plugin in self.plugins for k in plugin.scenario_keys())
        raise ValueError(f"Unknown scenario {key!r} (known: {known})")

    def gallery_config(self, key: str) -> ScenarioConfig:
        """Default configuration of a gallery scenario."""
        return self.get_scenario(key).default_config()

    def prepare(self, cfg: ScenarioConfig) -> PreparedScenario:
        """Build the operator, the families, `x_dagger` and the reference data of a config.

        Raises:
            ValueError: If the pieces do not fit together (file shapes,
                grid families on non-square truncations, unknown kinds).
        """
        kind = cfg.operator.kind
        scenario = None
        if kind == "dense-file":
            op = make_dense(load_matrix(cfg.operator.path), label=f"dense({cfg.operator.path})")
        else:
            scenario = self.get_scenario(kind)
            op = scenario.build_operator(cfg.operator)
        FX, FY = _families(cfg.discretization, op)

        xkind = cfg.xdagger.kind
        if xkind == "coeff-file":
            xdagger = load_coefficients(cfg.xdagger.path)
            if xdagger.size != op.x_dim:
                raise ValueError(f"x_dagger has {xdagger.size} coefficients, the operator needs {op.x_dim}")
        elif xkind == "random-in-range-of-adjoint":
            xdagger = random_in_range_of_adjoint(op, cfg.seed)
        elif scenario is not None:
            xdagger = scenario.build_xdagger(cfg, op)
        else:
            raise ValueError(f"x_dagger kind {xkind!r} needs a gallery operator")

        references: dict[str, CoeffVector] = {}
        extra = None
        if scenario is not None:
            references = scenario.references(cfg, op, xdagger)
            extra = scenario.test_functionals(cfg, op, xdagger)
        functionals = default_test_functionals(op.x_dim, cfg.diagnostics.weak_functionals)
        if extra is not None:
            functionals = np.vstack([functionals, extra])

        logger.info(f"Prepared {op.label}: {op.y_dim}x{op.x_dim}, tail bound {op.tail_bound:.3e}")
        return PreparedScenario(cfg, op, FX, FY, xdagger, references, functionals, scenario)

    def _nullspace(self, prepared: PreparedScenario) -> SubspaceBasis:
        rank_tol = prepared.cfg.tolerances.rank_tol
        if prepared.scenario is not None:
            return prepared.scenario.nullspace(prepared.op, rank_tol)
        return operator_nullspace(prepared.op, rank_tol)

    @staticmethod
    def _run_point(
        prepared: PreparedScenario,
        n: Level,
        m: Level,
        nullspace: SubspaceBasis | None,
    ) -> PointResult:
        """Solve and diagnose one sweep point."""
        cfg, op, FX, FY = prepared.cfg, prepared.op, prepared.FX, prepared.FY
        tol: Tolerances = cfg.tolerances
        record = solve_projected(op, FX, n, FY, m, prepared.xdagger, tol.rank_tol, tol.nullspace)
        report = condition_report(
            op,
            FX,
            n,
            FY,
            m,
            requested=cfg.diagnostics.requested(),
            xdagger=prepared.xdagger,
            x_nm=record.x,
            K=cfg.diagnostics.ubc_K,
            nullspace=nullspace,
            rank_tol=tol.rank_tol,
        )

        consistent = record.consistent
        if cfg.diagnostics.oblique:
            primal = oblique_decompose_primal(op, FX, n, FY, m, prepared.xdagger, tol.rank_tol, tol.reconstruction)
            dual = oblique_decompose_dual(op, FX, n, FY, m, prepared.xdagger, tol.rank_tol, tol.reconstruction)
            agreement = float(np.linalg.norm(primal.v - record.x)) / max(1.0, record.norm)
            k = n if n is not INFINITY else FX.max_level
            deviation = check_cor10(op, FX, n, FY, m, k, tol.cor10_trials, cfg.seed, tol.rank_tol)
            if agreement > tol.reconstruction:
                logger.warning(f"x_(n,m) and the oblique part v differ by {agreement:.3e} at n={n}, m={m}")
            if deviation > tol.cor10:
                logger.warning(f"Projector identities deviate by {deviation:.3e} at n={n}, m={m}")
            consistent = (
                consistent
                and primal.consistent
                and dual.consistent
                and agreement <= tol.reconstruction
                and deviation <= tol.cor10
            )
        return PointResult(n, m, record, report, not consistent)

    def run_scenario(self, cfg: ScenarioConfig, jobs: int | None = None) -> SweepResult:
        """Run the sweep of a config with solve and the requested diagnostics.

        Sweep points run in a thread pool of `jobs` workers (default: one
        per core). A point that raises is logged, left empty in the table
        and marks the result inconsistent; the rest of the sweep goes on.

        Args:
            cfg (ScenarioConfig): A validated config.
            jobs (int | None): Number of worker threads.

        Returns:
            SweepResult: Table rows in sweep order, summary and metadata.
        """
        prepared = self.prepare(cfg)
        diagnostics = cfg.diagnostics
        points = cfg.sweep.points()
        for n, m in points:
            prepared.FX.indices(n)
            prepared.FY.indices(m)

        needs_nullspace = diagnostics.space or diagnostics.local or diagnostics.gap
        nullspace = self._nullspace(prepared) if needs_nullspace else None

        logger.info(f"Running {len(points)} sweep points of {cfg.name or prepared.op.label}")
        results: list[PointResult] = []
        workers = jobs or os.cpu_count() or 1
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures: list[tuple[Future[PointResult], Level, Level]] = [
                (executor.submit(self._run_point, prepared, n, m, nullspace), n, m) for n, m in points
            ]
            for future, n, m in futures:
                try:
                    results.append(future.result())
                except Exception:
                    logger.exception(f"Sweep point n={n}, m={m} failed")
                    results.append(PointResult(n, m, None, None, True))

        records = [r.record for r in results if r.record is not None]
        finite_n = [n for n in cfg.sweep.n if n is not INFINITY]
        probe = None
        if diagnostics.space and finite_n:
            probe = space_condition_probe(
                prepared.op,
                prepared.FX,
                max(finite_n),
                cfg.tolerances.rank_tol,
                cfg.tolerances.space,
                nullspace=nullspace,
            )
        verdict = None
        if diagnostics.local and records:
            verdict = classify_local(
                records,
                prepared.xdagger,
                prepared.functionals,
                nullspace,
                cfg.tolerances.strong,
                cfg.tolerances.bound_factor,
            )

        rows = []
        weak = iter(verdict.weak_proxy if verdict else ())
        for result in results:
            space_dist = None
            if probe is not None and result.n is not INFINITY and probe.nullspace_dim:
                space_dist = float(probe.distances[probe.levels.index(result.n)].max())
            elif probe is not None and result.n is not INFINITY:
                space_dist = 0.0
            weak_max = next(weak) if verdict and result.record is not None else None
            rows.append(self._row(prepared, result, space_dist, weak_max))
        table = pl.DataFrame(rows, schema=SweepRow.get_polars_schema(), orient="row")

        inconsistent = any(r.inconsistent for r in results)
        summary = {
            "points": len(results),
            "inconsistent_points": sum(r.inconsistent for r in results),
            "bounded": verdict.bounded if verdict else None,
            "strong_criterion_met": verdict.strong_criterion_met if verdict else None,
            "limsup_norm": verdict.limsup_norm if verdict else None,
            "reference_norm": verdict.reference_norm if verdict else None,
            "nullspace_drift_max": max(verdict.nullspace_drift, default=None) if verdict else None,
            "space_condition": probe.verdict if probe else None,
            "nullspace_dim": probe.nullspace_dim if probe else None,
            "intersection_dims": list(probe.intersection_dims) if probe else None,
        }
        metadata = {
            "name": cfg.name,
            "config_hash": config_hash(cfg),
            "operator": prepared.op.label,
            "truncation": {"x_dim": prepared.op.x_dim, "y_dim": prepared.op.y_dim},
            "tail_bound": prepared.op.tail_bound,
            "tolerances": cfg.tolerances._asdict(),
            "seed": cfg.seed,
        }
        logger.info(f"Finished {cfg.name or prepared.op.label}: inconsistent={inconsistent}")
        return SweepResult(table, summary, metadata, inconsistent)

    @staticmethod
    def _row(
        prepared: PreparedScenario,
        result: PointResult,
        space_dist: float | None,
        weak_max: float | None,
    ) -> SweepRow:
        record, report = result.record, result.report
        if record is None or report is None:
            return SweepRow(n=str(result.n), m=str(result.m), inconsistent=True)

        def distance(key: str) -> float | None:
            ref = prepared.references.get(key)
            return None if ref is None else float(np.linalg.norm(record.x - ref))

        return SweepRow(
            n=str(result.n),
            m=str(result.m),
            norm_x=record.norm,
            err_to_xdagger=record.error_to_reference,
            err_to_u=distance("u"),
            err_to_v=distance("v"),
            sigma_min=record.sigma_min,
            kappa=record.kappa,
            ubc_proxy=report.ubc_proxy,
            rho_primal=report.rho_primal,
            rho_dual=report.rho_dual,
            rho_condadj=report.rho_condadj,
            eta_oneA=report.eta_oneA,
            C_threeA=report.C_threeA,
            natterer=report.natterer_value,
            luecke_hickey=report.luecke_hickey,
            space_dist_max=space_dist,
            weak_proxy_max=weak_max,
            residual=record.residual,
            rank=record.rank,
            ubc_tail=report.ubc_tail,
            simple_global=report.simple_global,
            simple_local=report.simple_local,
            thisaa=report.thisaa,
            wiederwas=report.wiederwas,
            adjoint_dist=report.adjoint_dist,
            error_bound=report.error_bound,
            gap=report.gap,
            inconsistent=result.inconsistent,
        )
