"""Command-line front door: `projlab solve | sweep | diagnose | gallery | list`.

Exit codes: 0 on success, 1 if any sweep point was flagged inconsistent,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import TYPE_CHECKING

from projlab.config import ConfigError, ScenarioConfig, apply_overrides, load_config
from projlab.main import Laboratory
from projlab.models.helpers import INFINITY
from projlab.utils import emit

if TYPE_CHECKING:
    from projlab.models.base import SweepResult
    from projlab.models.types import Level

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_USAGE = 2

DIAGNOSE_COLUMNS = (
    "n",
    "m",
    "ubc_proxy",
    "ubc_tail",
    "rho_primal",
    "rho_dual",
    "rho_condadj",
    "eta_oneA",
    "C_threeA",
    "natterer",
    "luecke_hickey",
    "simple_global",
    "simple_local",
    "thisaa",
    "wiederwas",
    "adjoint_dist",
    "error_bound",
    "gap",
    "space_dist_max",
    "inconsistent",
)


def _level(text: str) -> Level:
    if text == "inf":
        return INFINITY
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f'levels are positive integers or "inf", got {text!r}') from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"levels must be positive, got {value}")
    return value


def _tolerance(text: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name or not value:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), value.strip()


def _run_options(parser: argparse.ArgumentParser, source: bool = True) -> None:
    if source:
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument("--config", metavar="PATH", help="JSON scenario file")
        group.add_argument("--scenario", metavar="KEY", help="start from a gallery scenario")
    parser.add_argument("--out", metavar="PATH", help="output file (default: standard output)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format")
    parser.add_argument("--jobs", type=int, metavar="N", help="worker threads (default: one per core)")
    parser.add_argument("--seed", type=int, metavar="N", help="seed for random elements and checks")
    parser.add_argument(
        "--tol",
        type=_tolerance,
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override a tolerance, e.g. --tol strong=1e-8",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""
    parser = argparse.ArgumentParser(
        prog="projlab",
        description="Sweeps and convergence diagnostics for least-squares projection methods.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    solve = commands.add_parser("solve", help="solve at a single (n, m)")
    _run_options(solve)
    solve.add_argument("--n", type=_level, help='domain level or "inf"')
    solve.add_argument("--m", type=_level, help='codomain level or "inf"')

    _run_options(commands.add_parser("sweep", help="run the configured (n, m) sweep"))
    _run_options(commands.add_parser("diagnose", help="sweep, emitting only the condition columns"))

    gallery = commands.add_parser("gallery", help="run a named gallery scenario")
    gallery.add_argument("key", help="scenario key, see `projlab list`")
    _run_options(gallery, source=False)

    commands.add_parser("list", help="list the gallery scenarios")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load(args: argparse.Namespace, lab: Laboratory) -> ScenarioConfig:
    key = args.key if args.command == "gallery" else args.scenario
    cfg = lab.gallery_config(key) if key else load_config(args.config)
    n, m = getattr(args, "n", None), getattr(args, "m", None)
    if args.command == "solve" and n is None and m is None:
        n, m = cfg.sweep.points()[0]
    return apply_overrides(
        cfg,
        tolerances=dict(args.tol),
        seed=args.seed,
        n=n,
        m=m,
        output_format=args.format,
        output_path=args.out,
    )


def _write(result: SweepResult, cfg: ScenarioConfig) -> None:
    text = emit(result, cfg.output.format, cfg.output.path)
    if cfg.output.path is None:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    lab = Laboratory()

    if args.command == "list":
        for info in lab.get_scenarios():
            sys.stdout.write(f"{info.key}\t{info.name}\t{info.description}\n")
        return EXIT_OK

    if args.command == "gallery":
        try:
            lab.get_scenario(args.key)
        except ValueError as exc:
            parser.error(str(exc))

    try:
        cfg = _load(args, lab)
        result = lab.run_scenario(cfg, jobs=args.jobs)
    except ConfigError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"projlab: {exc}\n")
        return EXIT_USAGE

    if args.command == "diagnose":
        result = result._replace(table=result.table.select(DIAGNOSE_COLUMNS))
    _write(result, cfg)

    if result.inconsistent:
        logger.warning(f"{result.summary['inconsistent_points']} sweep point(s) flagged inconsistent")
        return EXIT_INCONSISTENT
    return EXIT_OK
