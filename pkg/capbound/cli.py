"""Command-line interface for capbound."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .channels import (
    ChoiChannel,
    amplitude_damping,
    channel_compose,
    channel_difference,
    depolarizing,
    kraus_and_complementary,
)
from .config import RunConfig, load_config
from .const import (
    COMMAND_BOUND_SHANNON,
    COMMAND_DEPOL_SWEEP,
    COMMAND_FD_CURVES,
    COMMAND_NORMS,
    COMMAND_SELFTEST,
    CONF_CB_NORM,
    CONF_COMMAND,
    CONF_EPS1_RULE,
    CONF_FEAS_TOL,
    CONF_FORMAT,
    CONF_GAP_TOL,
    CONF_MAX_RETRIES,
    CONF_N_POINTS,
    CONF_OUTPUT_DIR,
    CONF_P_MAX,
    CONF_P_MIN,
    CONF_POINT_TIMEOUT,
    CONF_SAMPLE_NORMS,
    CONF_SEED,
    CONF_SOLVER,
    CONF_THREADS,
    CONF_TOLERANCES,
    EXIT_BAD_INPUT,
    EXIT_OK,
    EXIT_SELFTEST_FAILED,
    EXIT_SOLVER_FAILURE,
    FD_SVG,
    EPS1_RULES,
    FORMAT_JSON,
    FORMAT_SVG,
    FORMATS,
    SUPPORTED_SOLVERS,
)
from .coordinator import depolarizing_sweep
from .entropy import (
    DistancePair,
    bound_csiszar,
    bound_fd,
    bound_sason,
    saturating_pair,
)
from .exceptions import DomainError, SolverFailure, ValidationError
from .norms import (
    diamond_norm_program,
    eps_phi,
    eps_phi_program,
    m_infinity_program,
    m_one_program,
    norm_bundle,
)
from .reporting import (
    BOUNDS_COLUMNS,
    bounds_rows,
    format_csv,
    format_number,
    plot_series,
    problem_to_json,
    report_to_json,
    solution_to_json,
    write_json,
    write_sweep_outputs,
)
from .sdp import solve
from .selftest import run_selftest

_LOGGER = logging.getLogger(__name__)

CHANNELS: dict[str, Callable[[float], ChoiChannel]] = {
    "depolarizing": depolarizing,
    "amplitude-damping": amplitude_damping,
}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    """Collect the configuration flags present on args and validate them."""
    flags = {
        CONF_P_MIN: "p_min",
        CONF_P_MAX: "p_max",
        CONF_N_POINTS: "n_points",
        CONF_SEED: "seed",
        CONF_OUTPUT_DIR: "out",
        CONF_FORMAT: "format",
        CONF_THREADS: "threads",
        CONF_SOLVER: "solver",
        CONF_POINT_TIMEOUT: "timeout",
        CONF_MAX_RETRIES: "retries",
        CONF_SAMPLE_NORMS: "sample",
        CONF_CB_NORM: "cb_norm",
        CONF_EPS1_RULE: "eps1_rule",
    }
    data: dict[str, Any] = {CONF_COMMAND: args.command}
    for key, attr in flags.items():
        value = getattr(args, attr, None)
        if value is not None:
            data[key] = value
    tolerances = {
        key: value
        for key, value in ((CONF_FEAS_TOL, args.feas_tol), (CONF_GAP_TOL, args.gap_tol))
        if value is not None
    }
    if tolerances:
        data[CONF_TOLERANCES] = tolerances
    return load_config(data)


def _print_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def cmd_bound_shannon(args: argparse.Namespace) -> int:
    """Print the two-distance Shannon bounds and the saturating pair."""
    config = _config_from_args(args)
    pair = DistancePair(args.eps, args.nu)
    fd = bound_fd(args.d, pair)
    try:
        sason: float | None = bound_sason(args.d, pair)
    except DomainError as err:
        _LOGGER.info("Sason-type bound undefined: %s", err)
        sason = None
    csiszar = bound_csiszar(args.d, args.eps)
    q, p = saturating_pair(args.d, pair)
    result = {
        "d": args.d,
        "eps": args.eps,
        "nu": args.nu,
        "f_d": fd,
        "sason": sason,
        "csiszar": csiszar,
        "saturating_q": q.weights.tolist(),
        "saturating_p": p.weights.tolist(),
    }
    if config.output_format == FORMAT_JSON:
        _print_json(result)
        return EXIT_OK
    print(f"f_d      {format_number(fd)}")
    print(f"sason    {format_number(sason) if sason is not None else 'undefined'}")
    print(f"csiszar  {format_number(csiszar)}")
    print("q        " + " ".join(format_number(x) for x in q.weights))
    print("p        " + " ".join(format_number(x) for x in p.weights))
    return EXIT_OK


def cmd_norms(args: argparse.Namespace) -> int:
    """Solve the degradability norm programs of one channel and print the bundle."""
    config = _config_from_args(args)
    settings = config.solver_settings()
    phi = CHANNELS[args.channel](args.p)
    _, comp = kraus_and_complementary(phi)
    eps = eps_phi(phi, settings, comp)
    delta = channel_difference(comp, channel_compose(eps.degrading, phi))
    bundle = norm_bundle(delta, settings, sample=config.sample_norms, seed=config.seed)

    result = {
        "channel": args.channel,
        "p": args.p,
        "d_env": comp.dim_out,
        "eps_phi": eps.value,
        **bundle.as_dict(),
    }
    if args.dump_sdp is not None:
        programs = {
            "eps_phi": eps_phi_program(phi, comp),
            "diamond": diamond_norm_program(delta),
            "m1_plus": m_one_program(delta, 1),
            "m1_minus": m_one_program(delta, -1),
            "minf_plus": m_infinity_program(delta, 1),
            "minf_minus": m_infinity_program(delta, -1),
        }
        for name, problem in programs.items():
            write_json(
                args.dump_sdp / f"{name}.json",
                {
                    "problem": problem_to_json(problem),
                    "solution": solution_to_json(solve(problem, settings)),
                },
            )
    _print_json(result)
    return EXIT_OK


def cmd_depol_sweep(args: argparse.Namespace) -> int:
    """
    Run the depolarizing sweep and write CSV, JSON and SVG outputs.

    Every file is always written; --format selects the stdout summary: the
    bounds table (csv), every point (json) or the figure paths (svg).
    """
    config = _config_from_args(args)
    reports = depolarizing_sweep(config)
    paths = write_sweep_outputs(config.output_dir, reports, config)
    if config.output_format == FORMAT_JSON:
        _print_json(
            {"files": [str(p) for p in paths], "points": [report_to_json(r) for r in reports]}
        )
    elif config.output_format == FORMAT_SVG:
        for path in paths:
            if path.suffix == ".svg":
                print(path)
    else:
        print(format_csv(BOUNDS_COLUMNS, bounds_rows(reports)), end="")
    failed = [r for r in reports if r.error is not None]
    for r in failed:
        _LOGGER.warning("p=%s: %s", format_number(r.p), r.error)
    if reports and len(failed) == len(reports):
        _LOGGER.error("Every sweep point failed")
        return EXIT_SOLVER_FAILURE
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    """Run the invariant suite and print a pass/fail table."""
    config = _config_from_args(args)
    results = run_selftest(quick=args.quick, config=config)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  {r.seconds:7.2f}s  {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST_FAILED


def cmd_fd_curves(args: argparse.Namespace) -> int:
    """Plot f_d(eps, nu) against eps for several fixed nu."""
    config = _config_from_args(args)
    eps_grid = np.linspace(0.0, 1.0, 401)
    series: dict[str, list[float]] = {}
    for nu in args.nu:
        values = []
        for eps in eps_grid:
            try:
                values.append(bound_fd(args.d, DistancePair(float(eps), min(nu, float(eps)))))
            except DomainError:
                values.append(float("nan"))
        series[f"nu = {nu:g}"] = values
    plot_series(
        config.output_dir / FD_SVG,
        eps_grid,
        series,
        "eps",
        "f_d(eps, nu)",
        f"Two-distance Shannon bound, d = {args.d}",
    )
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser, with_format: bool) -> None:
    parser.add_argument("--seed", type=int, help="random seed")
    parser.add_argument("--solver", choices=SUPPORTED_SOLVERS, help="SDP back end")
    parser.add_argument("--feas-tol", type=float, help="feasibility tolerance")
    parser.add_argument("--gap-tol", type=float, help="relative duality gap tolerance")
    if with_format:
        parser.add_argument("--format", choices=FORMATS, help="stdout format")
    parser.add_argument("--out", type=Path, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="capbound",
        description="Capacity upper bounds for approximately degradable quantum channels.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    shannon = sub.add_parser(COMMAND_BOUND_SHANNON, help="two-distance Shannon entropy bounds")
    shannon.add_argument("--d", type=int, required=True, help="alphabet size")
    shannon.add_argument("--eps", type=float, required=True, help="total variation distance")
    shannon.add_argument("--nu", type=float, help="local distance (defaults to eps)")
    shannon.set_defaults(handler=cmd_bound_shannon)

    norms = sub.add_parser(COMMAND_NORMS, help="degradability norms of one channel")
    norms.add_argument("--channel", choices=sorted(CHANNELS), default="depolarizing")
    norms.add_argument("--p", type=float, required=True, help="channel parameter")
    norms.add_argument("--sample", action="store_true", default=None, help="sampled norms")
    norms.add_argument("--dump-sdp", type=Path, help="write programs and solutions here")
    norms.set_defaults(handler=cmd_norms)

    sweep = sub.add_parser(COMMAND_DEPOL_SWEEP, help="depolarizing capacity bounds")
    sweep.add_argument("--p-min", type=float)
    sweep.add_argument("--p-max", type=float)
    sweep.add_argument("--n-points", type=int)
    sweep.add_argument("--threads", type=int, help="worker count")
    sweep.add_argument("--timeout", type=float, help="seconds per point")
    sweep.add_argument("--retries", type=int, help="retries per point")
    sweep.add_argument("--sample", action="store_true", default=None, help="sampled norms")
    sweep.add_argument("--cb-norm", action="store_true", default=None, help="cb-norm comparison")
    sweep.add_argument(
        "--eps1-rule", choices=EPS1_RULES, help="combine the M_1 signs by max (default) or min"
    )
    sweep.set_defaults(handler=cmd_depol_sweep)

    selftest = sub.add_parser(COMMAND_SELFTEST, help="run the invariant suite")
    selftest.add_argument("--quick", action="store_true", help="fast subset")
    selftest.set_defaults(handler=cmd_selftest)

    fd = sub.add_parser(COMMAND_FD_CURVES, help="plot f_d against eps")
    fd.add_argument("--d", type=int, default=10, help="alphabet size")
    fd.add_argument("--nu", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3])
    fd.set_defaults(handler=cmd_fd_curves)

    for p in (shannon, sweep):
        _add_common(p, with_format=True)
    for p in (norms, selftest, fd):
        _add_common(p, with_format=False)
    return parser


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    """
    Entry point of the capbound command.

    Returns:
        0 on success, 1 on a failed self-test, 2 on bad input, 3 on solver failure
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    if getattr(args, "nu", 0) is None:
        args.nu = args.eps

    try:
        return int(args.handler(args))
    except (ValidationError, DomainError) as err:
        _LOGGER.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except SolverFailure as err:
        _LOGGER.error("Solver failure (%s): %s", err.status, err)
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
