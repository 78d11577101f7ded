"""
Command-line entry point for the stratification toolkit.

Usage: python -m src.cli <subcommand> [flags]

Subcommands: synth, density-scan, strata, fit-plane, reifenberg, cover, tail.
Every flag mirrors a key of the flat ``--config`` file; flags win. Reports
go to stdout and to ``<out>/<subcommand>.json``; logs and errors go to
stderr. Exit codes: 0 success, 2 invalid input, 3 numerical guard,
1 unexpected failure.
"""

import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

from .core.config import RunConfig, load_run_config, runtime_settings
from .core.exceptions import StrataException
from .tools.analysis import run_cover, run_density_scan, run_fit_plane, run_reifenberg, run_strata, run_tail
from .tools.reports import dump_json, write_json
from .tools.synthesis import synth_field

logger = logging.getLogger(__name__)

COMMANDS: Dict[str, Callable[[RunConfig], Dict[str, Any]]] = {
    "synth": synth_field,
    "density-scan": run_density_scan,
    "strata": run_strata,
    "fit-plane": run_fit_plane,
    "reifenberg": run_reifenberg,
    "cover": run_cover,
    "tail": run_tail,
}


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def _frame(text: str) -> List[List[float]]:
    return [_float_list(row) for row in text.split(";") if row.strip()]


def _common_flags() -> argparse.ArgumentParser:
    """Flags shared by every subcommand; None means 'not given'."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="Flat key=value config file")
    parent.add_argument("--out", help="Output directory")
    parent.add_argument("--verbose", action="store_true", help="Debug logging on stderr")

    source = parent.add_argument_group("field source")
    source.add_argument("--field", help="Field JSON file (overrides the inline field)")
    source.add_argument("--kind", help="Inline field kind: power_law, zero or affine_bump")
    source.add_argument("--n", type=int, help="Spatial dimension")
    source.add_argument("--p", type=float, help="Nonlinearity exponent")
    source.add_argument("--m", type=int, help="Dimension of the singular plane")
    source.add_argument("--center", type=_float_list, help="Singular plane base point, comma separated")
    source.add_argument("--frame", type=_frame, help="Frame rows, ';' between rows")
    source.add_argument("--c0", type=float, help="Override of the power-law constant")

    params = parent.add_argument_group("parameters")
    params.add_argument("--x", type=_float_list, help="Probe point or root centre")
    params.add_argument("--eps", type=float, help="Symmetry threshold")
    params.add_argument("--r", type=float, help="Terminal radius")
    params.add_argument("--r-min", dest="r_min", type=float, help="Smallest dyadic scale")
    params.add_argument("--R", dest="R", type=float, help="Root or ball radius")
    params.add_argument("--radii", type=_float_list, help="Density-scan radii")
    params.add_argument("--k", type=int, help="Stratum or subspace dimension")
    params.add_argument("--j", type=int, help="Derivative order")
    params.add_argument("--rho", type=float, help="Covering radius ratio (< 1/100)")
    params.add_argument("--delta", type=float, help="Energy pinch; hypothesis threshold for reifenberg")
    params.add_argument("--xi", type=float, help="Centre-density tolerance")
    params.add_argument("--samples", type=int, help="Sample points for strata and covers")
    params.add_argument("--sample-factor", dest="sample_factor", type=int, help="Ball samples per 2^n")
    params.add_argument("--radial-nodes", dest="radial_nodes", type=int, help="Radial quadrature nodes")
    params.add_argument("--angular-order", dest="angular_order", type=int, help="Angular quadrature order")
    params.add_argument("--lambdas", type=_float_list, help="Increasing level grid for tails")
    params.add_argument("--box-origin", dest="box_origin", type=_float_list, help="Grid box corner for synth")
    params.add_argument("--box-side", dest="box_side", type=float, help="Grid box side for synth")
    params.add_argument("--h", type=float, help="Grid spacing for synth")
    params.add_argument("--measure", help="Measure JSON file")
    params.add_argument("--radii-file", dest="radii_file", help="JSON file with explicit ball radii")
    params.add_argument("--seed", type=int, help="Seed for the sampled k-plane oracle of fit-plane")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strata", description="Quantitative stratification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _common_flags()
    helps = {
        "synth": "Emit an analytic field or a sampled grid",
        "density-scan": "Densities and gaps over radii (CSV + JSON)",
        "strata": "Stratum memberships of sample points",
        "fit-plane": "Best-fit k-plane and displacement of a measure",
        "reifenberg": "Reifenberg hypothesis integrals and packing ratio",
        "cover": "Good/bad-ball cover of a stratum",
        "tail": "Superlevel measures and the weak-L^q exponent",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[parent], help=text)
    return parser


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, runtime_settings().log_level, logging.WARNING)
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root.addHandler(handler)
    root.setLevel(level)


def _report_error(payload: Dict[str, Any]) -> None:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv, run one subcommand and return its exit code.

    Args:
        argv: Arguments without the program name

    Returns:
        0 on success, 2 on invalid input, 3 on numerical guards, 1 otherwise
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2

    configure_logging(args.verbose)
    overrides = {
        key: value for key, value in vars(args).items()
        if key not in ("command", "config", "verbose")
    }
    try:
        run = load_run_config(args.config, overrides)
        result = COMMANDS[args.command](run)
        result["command"] = args.command
        result["config"] = run.provenance()
        write_json(run.out, f"{args.command}.json", result)
        sys.stdout.write(dump_json(result) + "\n")
        return 0
    except StrataException as e:
        logger.error(f"{args.command} failed: {e.user_message}")
        _report_error(e.to_dict(include_technical=True))
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        _report_error({"error_type": e.__class__.__name__, "user_message": str(e), "exit_code": 1})
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
