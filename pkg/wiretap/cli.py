"""
Wiretap CLI - thresholds, tables, optimizer runs, sweeps and bounds.

JSON results go to stdout, diagnostics to stderr. Every file written with
--out gets a `<out>.manifest.json` next to it.

Exit codes: 0 ok, 1 invalid input, 2 solver failure, 3 no KKT certificate
(partial result printed).
"""

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bounds import scalar_bound_report
from .config import configure_logging, get_optimizer_config, get_quadrature_config
from .mc_oracle import mc_secrecy_information
from .models import ChannelParams, OptimizeResult, OptimizerConfig, ShellPmf, UnitMode
from .optimizer import optimize, secrecy_information
from .regime import threshold
from .run_deps import RunDeps
from .sweeps import (
    SweepResult,
    parse_grid,
    sweep_capacity,
    sweep_density,
    sweep_gfunction,
    sweep_output_density,
    sweep_threshold,
    table1_rows,
)
from .validation import (
    DegenerateGap,
    NonConvergence,
    ParamsValidationError,
    TooManyPoints,
    WiretapError,
    validate_params,
)

logger = logging.getLogger("wiretap.cli")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_NONCONVERGENCE = 3

# Columns written as integers rather than scientific notation
INTEGER_COLUMNS = {"n", "support_size"}


# =============================================================================
# Output Helpers
# =============================================================================

def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _format(column: str, value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if column in INTEGER_COLUMNS:
        return str(int(value))
    return f"{value:.9e}"


def write_csv(columns: Sequence[str], rows: Sequence[Sequence[float]], out: Optional[str]) -> None:
    """UTF-8, comma-delimited, 9-significant-digit scientific notation."""
    handle = open(out, "w", newline="", encoding="utf-8") if out else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(c, v) for c, v in zip(columns, row)])
    finally:
        if out:
            handle.close()


def _write_sweep(result: SweepResult, deps: RunDeps, out: Optional[str]) -> None:
    deps.use_csv_schema(result.name)
    write_csv(result.columns, result.rows, out)
    if out:
        deps.add_output(out)
        deps.write_manifest(out)


def _params(args: argparse.Namespace, radius: Optional[float] = None) -> ChannelParams:
    return validate_params({
        "sigma1_sq": args.sigma1_sq,
        "sigma2_sq": args.sigma2_sq,
        "n": args.n,
        "radius": args.radius if radius is None else radius,
    })


def _load_pmf(path: Optional[str]) -> Optional[ShellPmf]:
    if not path:
        return None
    return ShellPmf.model_validate_json(Path(path).read_text())


def _optimizer_config(args: argparse.Namespace) -> OptimizerConfig:
    overrides = {}
    if getattr(args, "epsilon", None) is not None:
        overrides["epsilon"] = args.epsilon
    if getattr(args, "kkt_grid", None) is not None:
        overrides["kkt_grid"] = args.kkt_grid
    base = get_optimizer_config()
    return OptimizerConfig(**{**base.model_dump(), **overrides})


# =============================================================================
# Commands
# =============================================================================

def cmd_threshold(args: argparse.Namespace) -> int:
    result = threshold(args.sigma1_sq, args.sigma2_sq, args.n, args.tol)
    _emit(result.model_dump())
    return EXIT_OK


def cmd_table1(args: argparse.Namespace) -> int:
    deps = RunDeps(command="table1", params={"n_max": args.n_max, "limits": args.limits, "tol": args.tol})
    deps.add_config("quadrature", get_quadrature_config())
    result = table1_rows(range(1, args.n_max + 1), limits=args.limits, tol=args.tol, threads=args.threads)
    _write_sweep(result, deps, args.out)
    return EXIT_OK


def write_trace(result: OptimizeResult, out: str) -> str:
    """Write `<out>.trace.json`: one entry per accepted update, in order."""
    path = f"{out}.trace.json"
    entries = [point.model_dump(mode="json") for point in result.trace]
    Path(path).write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
    return path


def cmd_optimize(args: argparse.Namespace) -> int:
    params = _params(args)
    opt_cfg = _optimizer_config(args)
    units = UnitMode(args.units)
    deps = RunDeps(command="optimize", params=params.model_dump())
    deps.add_config("optimizer", opt_cfg)
    deps.add_config("quadrature", get_quadrature_config())

    partial = False
    try:
        result = optimize(params, opt_cfg, initial=_load_pmf(args.pmf_json), threads=args.threads)
    except (NonConvergence, TooManyPoints) as e:
        logger.error(f"[CLI] {e}")
        if e.partial is None:
            raise
        result, partial = e.partial, True

    payload = result.model_dump(exclude={"trace"})
    payload["capacity"] = result.capacity_in(units)
    payload["units"] = units.value
    payload["partial"] = partial
    if args.out:
        write_csv(["radius", "probability"], list(zip(result.pmf.radii, result.pmf.probs)), args.out)
        deps.use_csv_schema("pmf")
        deps.add_output(args.out)
        payload["trace_path"] = write_trace(result, args.out)
        deps.add_output(payload["trace_path"])
        payload["manifest"] = deps.write_manifest(args.out)
    _emit(payload)
    return EXIT_NONCONVERGENCE if partial else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    grid = parse_grid(args.grid)
    deps = RunDeps(command=f"sweep {args.quantity}", params=vars(args).copy())
    deps.params.pop("handler", None)
    deps.add_config("quadrature", get_quadrature_config())

    if args.quantity == "threshold":
        result = sweep_threshold(args.sigma1_sq, args.sigma2_sq, grid, threads=args.threads)
    elif args.quantity == "capacity":
        opt_cfg = _optimizer_config(args)
        deps.add_config("optimizer", opt_cfg)
        result = sweep_capacity(_params(args, radius=0.0), grid, opt_cfg, threads=args.threads)
    elif args.quantity == "gfunction":
        result = sweep_gfunction(_params(args), grid, threads=args.threads)
    else:
        params = _params(args)
        pmf = _load_pmf(args.pmf_json)
        if pmf is None:
            pmf = optimize(params, _optimizer_config(args), threads=args.threads).pmf
        if args.quantity == "density":
            result = sweep_density(params, pmf, grid, threads=args.threads)
        else:
            result = sweep_output_density(params, pmf, grid, threads=args.threads)

    _write_sweep(result, deps, args.out)
    if not result.succeeded():
        logger.error(f"[CLI] only {result.success_ratio:.0%} of grid points succeeded")
        return EXIT_SOLVER
    return EXIT_OK


def cmd_scalar_bounds(args: argparse.Namespace) -> int:
    params = validate_params({"sigma1_sq": args.sigma1_sq, "sigma2_sq": args.sigma2_sq, "n": 1, "radius": args.radius})
    cs = None if args.use_cg else args.cs
    report = scalar_bound_report(params, cs=cs, pmf=_load_pmf(args.pmf_json), i_eve=args.i_eve)
    _emit(report.model_dump())
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    params = _params(args)
    pmf = _load_pmf(args.pmf_json) or ShellPmf.single_shell(params.radius)
    estimate = mc_secrecy_information(pmf, params, args.samples, args.seed, args.threads)
    quadrature = secrecy_information(pmf, params)
    payload = estimate.model_dump()
    payload["quadrature"] = quadrature
    payload["agrees"] = estimate.agrees_with(quadrature)
    _emit(payload)
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def _channel_flags(parser: argparse.ArgumentParser, radius: bool = True) -> None:
    parser.add_argument("--sigma1-sq", type=float, required=True, help="legitimate noise variance")
    parser.add_argument("--sigma2-sq", type=float, required=True, help="eavesdropper noise variance")
    parser.add_argument("--n", type=int, required=True, help="dimension")
    if radius:
        parser.add_argument("--radius", type=float, default=0.0, help="amplitude constraint R")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wiretap", description="Secrecy capacity of the amplitude-constrained Gaussian wiretap channel")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="worker pool size (default WIRETAP_THREADS)")
    parser.add_argument("--log-level", default=None, help="logging level (default WIRETAP_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="low-amplitude threshold R_bar")
    _channel_flags(p, radius=False)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(handler=cmd_threshold)

    p = sub.add_parser("table1", help="threshold table for sigma1_sq = 1")
    p.add_argument("--n-max", type=int, default=35)
    p.add_argument("--limits", choices=["exact", "surrogate"], default="exact")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_table1)

    p = sub.add_parser("optimize", help="capacity-achieving shell pmf")
    _channel_flags(p)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--kkt-grid", type=int, default=None)
    p.add_argument("--units", choices=[u.value for u in UnitMode], default=UnitMode.NATS.value)
    p.add_argument("--pmf-json", default=None, help="initial pmf")
    p.add_argument("--out", default=None, help="pmf CSV path")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("sweep", help="CSV series over a grid")
    p.add_argument("--quantity", required=True,
                   choices=["capacity", "threshold", "gfunction", "density", "output-density"])
    p.add_argument("--grid", required=True, help="start:stop:points")
    p.add_argument("--sigma1-sq", type=float, required=True)
    p.add_argument("--sigma2-sq", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--radius", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--kkt-grid", type=int, default=None)
    p.add_argument("--pmf-json", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("scalar-bounds", help="support-size bounds for n = 1")
    p.add_argument("--sigma1-sq", type=float, required=True)
    p.add_argument("--sigma2-sq", type=float, required=True)
    p.add_argument("--radius", type=float, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--cs", type=float, default=None, help="secrecy capacity in nats")
    group.add_argument("--use-cg", action="store_true", help="use the average-power capacity")
    p.add_argument("--pmf-json", default=None, help="converged pmf for the implicit count")
    p.add_argument("--i-eve", type=float, default=0.0, help="I(X*; Y2) in nats")
    p.set_defaults(handler=cmd_scalar_bounds)

    p = sub.add_parser("oracle", help="Monte Carlo check of the secrecy information")
    _channel_flags(p)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pmf-json", default=None)
    p.set_defaults(handler=cmd_oracle)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except DegenerateGap as e:
        logger.error(f"[CLI] {e}")
        return EXIT_SOLVER
    except (NonConvergence, TooManyPoints) as e:
        logger.error(f"[CLI] {e}")
        return EXIT_NONCONVERGENCE
    except (ParamsValidationError, ValueError) as e:
        logger.error(f"[CLI] invalid input: {e}")
        return EXIT_INVALID
    except WiretapError as e:
        logger.error(f"[CLI] solver failure: {e}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
