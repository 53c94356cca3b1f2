"""Speed/severity sweeps against the fixed-size baseline, and scalability studies."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from scipy import stats as sps

from .ga import GAConfig, RunOutcome
from .runner import BASELINE, SWEEP, Batch, StreamFamily, WorkerPool
from .schedule import SvpsSchedule, constant_schedule
from .sizing import (
    DEFAULT_INITIAL_N,
    DEFAULT_THRESHOLD,
    ReliabilityCriterion,
    ReliabilityReport,
    SizingResult,
    size_population,
)
from .stats import PowerLawError, PowerLawFit, SampleStats, fit_power_law, t_test
from .trap import TrapProblem, make_problem

logger = logging.getLogger(__name__)


def default_taus() -> list[float]:
    """0.125 * 1.5**k for every k keeping the value <= 32."""
    out, k = [], 0
    while 0.125 * 1.5 ** k <= 32:
        out.append(0.125 * 1.5 ** k)
        k += 1
    return out


def default_rhos() -> list[float]:
    return [round(0.25 + 0.05 * k, 2) for k in range(16)]


@dataclass(frozen=True)
class SweepGrid:
    tau_values: tuple[float, ...] = field(default_factory=lambda: tuple(default_taus()))
    rho_values: tuple[float, ...] = field(default_factory=lambda: tuple(default_rhos()))

    def __post_init__(self):
        object.__setattr__(self, "tau_values", tuple(float(t) for t in self.tau_values))
        object.__setattr__(self, "rho_values", tuple(float(r) for r in self.rho_values))
        if not self.tau_values or not self.rho_values:
            raise ValueError("sweep grid needs at least one tau and one rho")
        if any(not (t > 0 and math.isfinite(t)) for t in self.tau_values):
            raise ValueError(f"every tau must be positive, got {self.tau_values}")
        if any(not 0 < r <= 1 for r in self.rho_values):
            raise ValueError(f"every rho must lie in ]0, 1], got {self.rho_values}")

    def cells(self):
        """(tau index, rho index, tau, rho) in canonical order."""
        for i, tau in enumerate(self.tau_values):
            for j, rho in enumerate(self.rho_values):
                yield i, j, tau, rho


@dataclass(frozen=True)
class SweepRecord:
    tau: float
    rho: float
    runs: int
    successes: int
    aes_mean: float
    aes_std: float
    feasible: bool
    t_stat: float
    p_value: float
    significant: bool
    evals_saved: float
    outcomes: tuple[RunOutcome, ...] = field(repr=False, default=())

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs


@dataclass(frozen=True)
class InstanceReport:
    problem: TrapProblem
    sizing: SizingResult
    g_max: int
    baseline: ReliabilityReport
    sweep: tuple[SweepRecord, ...]
    best: Optional[SweepRecord]

    @property
    def l(self) -> int:
        return self.problem.l

    @property
    def m(self) -> int:
        return self.problem.m

    @property
    def n(self) -> int:
        return self.baseline.size

    def summary_row(self) -> dict:
        b = self.best
        return {
            "l": self.l,
            "m": self.m,
            "n": self.n,
            "gmax": self.g_max,
            "baseline_sr": self.baseline.success_rate,
            "baseline_aes_mean": self.baseline.aes_mean,
            "baseline_aes_std": self.baseline.aes_std,
            "svps_aes_mean": b.aes_mean if b else math.nan,
            "svps_aes_std": b.aes_std if b else math.nan,
            "tau": b.tau if b else math.nan,
            "rho": b.rho if b else math.nan,
            "significant": b.significant if b else False,
            "evals_saved": b.evals_saved if b else math.nan,
            "feasible_cells": sum(r.feasible for r in self.sweep),
            "significant_cells": sum(r.significant for r in self.sweep),
        }


SUMMARY_COLUMNS = ("l", "m", "n", "gmax", "baseline_sr", "baseline_aes_mean", "baseline_aes_std",
                   "svps_aes_mean", "svps_aes_std", "tau", "rho", "significant", "evals_saved",
                   "feasible_cells", "significant_cells")

SWEEP_COLUMNS = ("l", "m", "n0", "gmax", "tau", "rho", "runs", "successes", "success_rate",
                 "aes_mean", "aes_std", "t_stat", "significant", "evals_saved")

FEASIBLE_COLUMNS = ("l", "m", "tau", "rho", "feasible", "evals_saved")


def baseline(problem: TrapProblem, n: int, crit: ReliabilityCriterion,
             config: GAConfig, streams: StreamFamily,
             pool: WorkerPool | None = None) -> ReliabilityReport:
    """Fixed-size reference runs at n, on streams disjoint from sizing and sweep."""
    pool = pool or WorkerPool()
    s = streams.child(problem.l, problem.m, BASELINE)
    outcomes = pool.replicate(problem, constant_schedule(n), config, s, crit.runs)
    return ReliabilityReport.from_outcomes(n, outcomes, crit)


def make_record(tau: float, rho: float, outcomes: Sequence[RunOutcome],
                ref: ReliabilityReport, crit: ReliabilityCriterion,
                variant: str = "welch", alpha: float = 0.05) -> SweepRecord:
    aes = [o.evaluations_to_solution for o in outcomes if o.success]
    cell = SampleStats.of(aes)
    ref_aes = [o.evaluations_to_solution for o in ref.outcomes if o.success]
    test = t_test(cell, SampleStats.of(ref_aes), alpha=alpha, variant=variant)
    feasible = crit.met(len(aes))
    return SweepRecord(
        tau=tau,
        rho=rho,
        runs=len(outcomes),
        successes=len(aes),
        aes_mean=cell.mean,
        aes_std=cell.std,
        feasible=feasible,
        t_stat=test.t,
        p_value=test.p_value,
        # a significant cell must be reliable and cheaper than the baseline
        significant=feasible and test.significant and cell.mean < ref.aes_mean,
        evals_saved=ref.aes_mean - cell.mean,
        outcomes=tuple(outcomes),
    )


def sweep(problem: TrapProblem, n_refined: int, g_max: int, grid: SweepGrid,
          crit: ReliabilityCriterion, config: GAConfig, streams: StreamFamily,
          ref: ReliabilityReport, pool: WorkerPool | None = None,
          variant: str = "welch") -> list[SweepRecord]:
    """Run every (tau, rho) cell from the same initial size and compare to `ref`."""
    pool = pool or WorkerPool()
    base = streams.child(problem.l, problem.m, SWEEP)
    cells = list(grid.cells())
    runs = tuple(range(crit.runs))
    batches = [
        Batch(problem, SvpsSchedule(n_refined, tau, rho, g_max), config, base.child(i, j), runs)
        for i, j, tau, rho in cells
    ]
    results = pool.map(batches)
    records = [make_record(tau, rho, out, ref, crit, variant)
               for (_, _, tau, rho), out in zip(cells, results)]
    return sorted(records, key=lambda r: (r.tau, r.rho))


def best_record(records: Sequence[SweepRecord]) -> Optional[SweepRecord]:
    """Lowest-AES feasible cell; ties go to larger rho, then larger tau."""
    feasible = [r for r in records if r.feasible and math.isfinite(r.aes_mean)]
    if not feasible:
        return None
    return min(feasible, key=lambda r: (r.aes_mean, -r.rho, -r.tau))


def sweep_rows(report: InstanceReport) -> list[dict]:
    return [
        {
            "l": report.l,
            "m": report.m,
            "n0": report.n,
            "gmax": report.g_max,
            "tau": r.tau,
            "rho": r.rho,
            "runs": r.runs,
            "successes": r.successes,
            "success_rate": r.success_rate,
            "aes_mean": r.aes_mean,
            "aes_std": r.aes_std,
            "t_stat": r.t_stat,
            "significant": r.significant,
            "evals_saved": r.evals_saved,
        }
        for r in report.sweep
    ]


@dataclass(frozen=True)
class FeasibleMap:
    rows: tuple[dict, ...]
    min_rho_by_tau: dict
    # Spearman correlation of tau vs the smallest feasible rho; None if undefined
    rank_correlation: Optional[float]


def feasible_set_map(records: Sequence[SweepRecord]) -> FeasibleMap:
    rows = tuple({"tau": r.tau, "rho": r.rho, "feasible": r.feasible,
                  "evals_saved": r.evals_saved} for r in records)
    min_rho: dict[float, float] = {}
    for r in records:
        if r.feasible:
            min_rho[r.tau] = min(min_rho.get(r.tau, math.inf), r.rho)
    corr = None
    if len(min_rho) >= 3:
        taus = sorted(min_rho)
        rhos = [min_rho[t] for t in taus]
        if len(set(rhos)) > 1:
            corr = float(sps.spearmanr(taus, rhos).statistic)
    return FeasibleMap(rows, dict(sorted(min_rho.items())), corr)


def run_instance(problem: TrapProblem, crit: ReliabilityCriterion, config: GAConfig,
                 streams: StreamFamily, grid: SweepGrid | None = None,
                 pool: WorkerPool | None = None, *, n: int | None = None,
                 g_max: int | None = None, initial_n: int = DEFAULT_INITIAL_N,
                 threshold: float = DEFAULT_THRESHOLD, gmax_statistic: str = "mean",
                 gmax_multiplier: float = 10, variant: str = "welch") -> InstanceReport:
    """Sizing (unless n and g_max are given), baseline, then the full sweep."""
    grid = grid or SweepGrid()
    pool = pool or WorkerPool()
    if n is None or g_max is None:
        sizing = size_population(problem, crit, config, streams, pool, initial_n, threshold,
                                 gmax_statistic=gmax_statistic)
        n = sizing.n_refined if n is None else n
        g_max = sizing.g_max_estimate if g_max is None else g_max
    else:
        sizing = SizingResult(n, n, g_max, ())
    run_config = config.with_cap(math.ceil(gmax_multiplier * g_max))
    ref = baseline(problem, n, crit, run_config, streams, pool)
    records = sweep(problem, n, g_max, grid, crit, run_config, streams, ref, pool, variant)
    best = best_record(records)
    if best is not None:
        logger.info("%s: n=%d baseline AES %.1f, best %.1f at tau=%.4g rho=%.2f",
                    problem, n, ref.aes_mean, best.aes_mean, best.tau, best.rho)
    return InstanceReport(problem, sizing, g_max, ref, tuple(records), best)


@dataclass(frozen=True)
class ScalabilityResult:
    reports: tuple[InstanceReport, ...]
    errors: dict
    power_law: Optional[PowerLawFit]
    fit_error: Optional[str] = None

    def power_points(self) -> list[tuple[int, float]]:
        return savings_points(self.reports)


def savings_points(reports: Sequence[InstanceReport]) -> list[tuple[int, float]]:
    """(initial size, evaluations saved by the best cell) per instance."""
    return [(r.n, r.best.evals_saved) for r in reports if r.best is not None]


def scalability(l_values: Sequence[int], m_values: Sequence[int], crit: ReliabilityCriterion,
                config: GAConfig, streams: StreamFamily, grid: SweepGrid | None = None,
                pool: WorkerPool | None = None, **instance_kw) -> ScalabilityResult:
    """Full pipeline per (l, m); one failing instance does not stop the rest."""
    reports, errors = [], {}
    for l in l_values:
        for m in m_values:
            try:
                reports.append(run_instance(make_problem(l, m), crit, config, streams, grid,
                                            pool, **instance_kw))
            except (RuntimeError, ValueError) as exc:
                logger.error("instance l=%d m=%d failed: %s", l, m, exc)
                errors[(l, m)] = exc
    try:
        return ScalabilityResult(tuple(reports), errors, fit_power_law(savings_points(reports)))
    except PowerLawError as exc:
        logger.warning("no power-law fit: %s", exc)
        return ScalabilityResult(tuple(reports), errors, None, str(exc))
