"""Command-line front end: size, run, sweep, scalability.

Exit status: 0 success, 1 usage or validation error, 2 runtime/estimation
error, 3 when `run` finishes but misses the reliability criterion.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .experiment import (
    FEASIBLE_COLUMNS,
    SUMMARY_COLUMNS,
    SWEEP_COLUMNS,
    InstanceReport,
    feasible_set_map,
    run_instance,
    scalability,
    sweep_rows,
)
from .io import upsert_csv, write_csv
from .runner import SINGLE, StreamFamily, WorkerPool
from .schedule import SvpsSchedule
from .sizing import (
    AUDIT_COLUMNS,
    EstimationError,
    ReliabilityReport,
    SizingError,
    audit_rows,
    size_population,
)
from .trap import make_problem

logger = logging.getLogger("svps")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_UNRELIABLE = 0, 1, 2, 3

SIZING_COLUMNS = ("l", "m") + AUDIT_COLUMNS
POWERLAW_COLUMNS = ("l", "m", "n_refined", "evals_saved", "exponent", "coefficient", "r_squared")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser):
    # SUPPRESS lets the flags appear before or after the sub-command
    p.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="TOML config file")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (u64)")
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker processes")
    p.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)


def _instance_flags(p: argparse.ArgumentParser):
    p.add_argument("--l", type=int, required=True, help="trap block length")
    p.add_argument("--m", type=int, required=True, help="number of blocks")
    p.add_argument("--runs", type=int, help="replications per reliability check")
    p.add_argument("--required", type=int, dest="required_successes",
                   help="successes needed to call a size reliable")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    _global_flags(common)
    parser = _Parser(prog="svps", parents=[common],
                     description="Population sizing and shrinking-population GA experiments.")
    parser.add_argument("--version", action="version", version=f"svps {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("size", parents=[common], help="bisection + refinement for one instance")
    _instance_flags(p)

    p = sub.add_parser("run", parents=[common], help="replicate one schedule")
    _instance_flags(p)
    p.add_argument("--n", type=int, required=True, help="initial population size")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--gmax", type=int, help="schedule horizon (required when rho < 1)")

    p = sub.add_parser("sweep", parents=[common], help="tau-rho sweep for one instance")
    _instance_flags(p)
    p.add_argument("--n", type=int, help="initial size (skips sizing together with --gmax)")
    p.add_argument("--gmax", type=int)
    p.add_argument("--tau-values", type=float, nargs="+")
    p.add_argument("--rho-values", type=float, nargs="+")
    p.add_argument("--rho-only", type=float, help="restrict the sweep to a single rho")

    p = sub.add_parser("scalability", parents=[common], help="full study over the instance grid")
    p.add_argument("--l-values", type=int, nargs="+")
    p.add_argument("--m-values", type=int, nargs="+")
    p.add_argument("--runs", type=int)
    p.add_argument("--required", type=int, dest="required_successes")
    p.add_argument("--tau-values", type=float, nargs="+")
    p.add_argument("--rho-values", type=float, nargs="+")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    overrides = {
        "master_seed": getattr(args, "seed", None),
        "worker_count": getattr(args, "workers", None),
        "output_dir": str(args.out) if getattr(args, "out", None) is not None else None,
        "runs": getattr(args, "runs", None),
        "required_successes": getattr(args, "required_successes", None),
        "tau_values": getattr(args, "tau_values", None),
        "rho_values": getattr(args, "rho_values", None),
        "l_values": getattr(args, "l_values", None),
        "m_values": getattr(args, "m_values", None),
    }
    if getattr(args, "rho_only", None) is not None:
        overrides["rho_values"] = [args.rho_only]
    if overrides["runs"] is not None and overrides["required_successes"] is None:
        # keep the 49/50 ratio when only the run count changes
        overrides["required_successes"] = math.ceil(0.98 * overrides["runs"])
    return load_config(getattr(args, "config", None), **overrides)


def _problem(args):
    try:
        return make_problem(args.l, args.m)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _print_report(label: str, rep: ReliabilityReport):
    print(f"{label}: n={rep.size} SR={rep.success_rate:.2f} ({rep.successes}/{rep.runs}) "
          f"AES={rep.aes_mean:.2f} +- {rep.aes_std:.2f} gens={rep.generations_mean:.2f}")


def cmd_size(args, cfg: ExperimentConfig) -> int:
    problem = _problem(args)
    out = Path(cfg.output_dir)
    with WorkerPool(cfg.worker_count) as pool:
        result = size_population(
            problem, cfg.criterion(), cfg.ga_config(), StreamFamily(cfg.master_seed), pool,
            cfg.bisection_initial_n, cfg.bisection_threshold, gmax_statistic=cfg.gmax_statistic,
        )
    rows = [{"l": problem.l, "m": problem.m, **r} for r in audit_rows(result)]
    upsert_csv(out / "sizing.csv", SIZING_COLUMNS, rows, cfg.master_seed)
    print(f"{problem}: n_bisection={result.n_bisection} n_refined={result.n_refined} "
          f"g_max={result.g_max_estimate}")
    return EXIT_OK


def cmd_run(args, cfg: ExperimentConfig) -> int:
    problem = _problem(args)
    if args.rho < 1 and args.gmax is None:
        raise UsageError("--gmax is required when --rho < 1")
    gmax = args.gmax if args.gmax is not None else 1
    try:
        schedule = SvpsSchedule(args.n, args.tau, args.rho, gmax)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = cfg.ga_config()
    if args.gmax is not None:
        config = config.with_cap(math.ceil(cfg.max_generations_multiplier * gmax))
    crit = cfg.criterion()
    streams = StreamFamily(cfg.master_seed).child(problem.l, problem.m, SINGLE)
    with WorkerPool(cfg.worker_count) as pool:
        outcomes = pool.replicate(problem, schedule, config, streams, crit.runs)
    rep = ReliabilityReport.from_outcomes(args.n, outcomes, crit)
    _print_report(f"{problem} tau={args.tau:g} rho={args.rho:g}", rep)
    return EXIT_OK if rep.passed else EXIT_UNRELIABLE


def _instance_files(reports: list[InstanceReport], cfg: ExperimentConfig, upsert: bool):
    out = Path(cfg.output_dir)
    write = upsert_csv if upsert else write_csv
    sweep_all, feas_all, summary, sizing = [], [], [], []
    for rep in reports:
        sweep_all += sweep_rows(rep)
        fmap = feasible_set_map(rep.sweep)
        feas_all += [{"l": rep.l, "m": rep.m, **row} for row in fmap.rows]
        summary.append(rep.summary_row())
        sizing += [{"l": rep.l, "m": rep.m, **r} for r in audit_rows(rep.sizing)]
        corr = "undefined" if fmap.rank_correlation is None else f"{fmap.rank_correlation:.3f}"
        logger.info("%s: tau vs min feasible rho rank correlation %s", rep.problem, corr)
    write(out / "sweep.csv", SWEEP_COLUMNS, sweep_all, cfg.master_seed)
    write(out / "feasible_map.csv", FEASIBLE_COLUMNS, feas_all, cfg.master_seed)
    write(out / "summary.csv", SUMMARY_COLUMNS, summary, cfg.master_seed)
    if sizing:
        write(out / "sizing.csv", SIZING_COLUMNS, sizing, cfg.master_seed)


def _print_summary(rep: InstanceReport):
    row = rep.summary_row()
    print(f"{rep.problem}: n={row['n']} g_max={row['gmax']} "
          f"baseline AES={row['baseline_aes_mean']:.2f} +- {row['baseline_aes_std']:.2f} "
          f"(SR {row['baseline_sr']:.2f})")
    if rep.best is None:
        print("  no feasible tau-rho cell")
    else:
        print(f"  best SVPS AES={row['svps_aes_mean']:.2f} +- {row['svps_aes_std']:.2f} "
              f"tau={row['tau']:.4g} rho={row['rho']:.2f} "
              f"significant={bool(row['significant'])} "
              f"({row['feasible_cells']} feasible, {row['significant_cells']} significant cells)")


def _instance_kw(cfg: ExperimentConfig) -> dict:
    return dict(initial_n=cfg.bisection_initial_n, threshold=cfg.bisection_threshold,
                gmax_statistic=cfg.gmax_statistic,
                gmax_multiplier=cfg.max_generations_multiplier, variant=cfg.t_test_variant)


def cmd_sweep(args, cfg: ExperimentConfig) -> int:
    problem = _problem(args)
    if (args.n is None) != (args.gmax is None):
        raise UsageError("--n and --gmax must be given together")
    with WorkerPool(cfg.worker_count) as pool:
        rep = run_instance(problem, cfg.criterion(), cfg.ga_config(),
                           StreamFamily(cfg.master_seed), cfg.grid(), pool,
                           n=args.n, g_max=args.gmax, **_instance_kw(cfg))
    _instance_files([rep], cfg, upsert=True)
    _print_summary(rep)
    return EXIT_OK


def cmd_scalability(args, cfg: ExperimentConfig) -> int:
    with WorkerPool(cfg.worker_count) as pool:
        result = scalability(cfg.l_values, cfg.m_values, cfg.criterion(), cfg.ga_config(),
                             StreamFamily(cfg.master_seed), cfg.grid(), pool,
                             **_instance_kw(cfg))
    reports = list(result.reports)
    _instance_files(reports, cfg, upsert=False)
    for rep in reports:
        _print_summary(rep)
    fit = result.power_law
    if fit is None:
        print(f"warning: no power-law fit ({result.fit_error})", file=sys.stderr)
    else:
        print(f"savings ~ {fit.coefficient:.4g} * n^{fit.exponent:.3f} (r^2={fit.r_squared:.3f}, "
              f"{fit.points} points)")
    nan = float("nan")
    rows = [{"l": r.l, "m": r.m, "n_refined": r.n, "evals_saved": r.best.evals_saved,
             "exponent": fit.exponent if fit else nan,
             "coefficient": fit.coefficient if fit else nan,
             "r_squared": fit.r_squared if fit else nan}
            for r in reports if r.best is not None]
    write_csv(Path(cfg.output_dir) / "powerlaw.csv", POWERLAW_COLUMNS, rows, cfg.master_seed)
    for (l, m), exc in sorted(result.errors.items()):
        print(f"instance l={l} m={m} failed: {exc}", file=sys.stderr)
    return EXIT_RUNTIME if result.errors and not reports else EXIT_OK


COMMANDS = {"size": cmd_size, "run": cmd_run, "sweep": cmd_sweep, "scalability": cmd_scalability}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    verbosity = getattr(args, "verbose", 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(verbosity, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"svps: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SizingError, EstimationError, OSError) as exc:
        print(f"svps: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
