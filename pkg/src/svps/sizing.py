"""Minimum reliable population size: doubling/bisection, then 1% refinement.

The search routines `bisect_size` and `refine_size` only see a monotone-ish
predicate ``probe(n, phase) -> bool``; the GA-backed wrappers plug in a
reliability check of `crit.runs` fresh random runs per candidate size.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, field
from typing import Callable

from .ga import GAConfig, RunOutcome
from .runner import SIZING, StreamFamily, WorkerPool
from .schedule import constant_schedule, round_half_up
from .trap import TrapProblem

logger = logging.getLogger(__name__)

DEFAULT_INITIAL_N = 8
DEFAULT_THRESHOLD = 1 / 16
DEFAULT_CEILING = 2 ** 20

Probe = Callable[[int, str], bool]


class SizingError(RuntimeError):
    """The doubling phase outgrew the configured ceiling."""


class EstimationError(RuntimeError):
    """No successful run to estimate the schedule horizon from."""


@dataclass(frozen=True)
class ReliabilityCriterion:
    runs: int = 50
    required_successes: int = 49

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not 0 <= self.required_successes <= self.runs:
            raise ValueError(
                f"required_successes must lie in [0, {self.runs}], got {self.required_successes}"
            )

    @property
    def ratio(self) -> float:
        return self.required_successes / self.runs

    def met(self, successes: int) -> bool:
        return successes >= self.required_successes


def _mean_std(values) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    if len(values) == 1:
        return float(values[0]), 0.0
    return statistics.fmean(values), statistics.stdev(values)


@dataclass(frozen=True)
class ReliabilityReport:
    """Aggregate of independent runs at one population size.

    AES and generation statistics are over successful runs only.
    """

    size: int
    runs: int
    successes: int
    aes_mean: float
    aes_std: float
    generations_mean: float
    passed: bool
    outcomes: tuple[RunOutcome, ...] = field(repr=False, default=())

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs

    @property
    def successful_generations(self) -> list[int]:
        return [o.generations for o in self.outcomes if o.success]

    @classmethod
    def from_outcomes(cls, size: int, outcomes, crit: ReliabilityCriterion) -> ReliabilityReport:
        outcomes = tuple(outcomes)
        wins = [o for o in outcomes if o.success]
        aes_mean, aes_std = _mean_std([o.evaluations_to_solution for o in wins])
        gens = [o.generations for o in wins]
        return cls(
            size=size,
            runs=len(outcomes),
            successes=len(wins),
            aes_mean=aes_mean,
            aes_std=aes_std,
            generations_mean=statistics.fmean(gens) if gens else math.nan,
            passed=crit.met(len(wins)),
            outcomes=outcomes,
        )


@dataclass(frozen=True)
class SizingResult:
    n_bisection: int
    n_refined: int
    g_max_estimate: int
    reports: tuple[tuple[str, ReliabilityReport], ...]

    @property
    def refined_report(self) -> ReliabilityReport:
        for _, rep in reversed(self.reports):
            if rep.size == self.n_refined:
                return rep
        raise KeyError(self.n_refined)


# --- search on an abstract predicate --------------------------------------

def bisect_size(probe: Probe, initial_n: int = DEFAULT_INITIAL_N,
                threshold: float = DEFAULT_THRESHOLD,
                ceiling: int = DEFAULT_CEILING) -> int:
    """Smallest size seen to pass after doubling then interval halving.

    Doubling stops at the first passing size; the bracket [lo, hi] is then
    halved (failures raise lo, passes lower hi) until (hi - lo) / lo <= threshold
    or the bracket cannot be split any further.
    """
    if initial_n < 2:
        raise ValueError(f"initial size must be >= 2, got {initial_n}")
    n = initial_n
    if probe(n, "doubling"):
        # no failing size observed; bracket below the first candidate
        lo, hi = max(2, n // 2), n
    else:
        while True:
            lo, n = n, 2 * n
            if n > ceiling:
                raise SizingError(f"population size would exceed ceiling {ceiling}")
            if probe(n, "doubling"):
                break
        hi = n
    while hi > lo and (hi - lo) / lo > threshold:
        mid = (lo + hi) // 2
        if mid in (lo, hi):
            break
        if probe(mid, "halving"):
            hi = mid
        else:
            lo = mid
    return hi


def refine_size(probe: Probe, n_prime: int, fraction: float = 0.01) -> int:
    """Shrink by max(1, round(fraction * n)) while the smaller size still passes."""
    n = n_prime
    while n > 2:
        step = max(1, round_half_up(fraction * n))
        candidate = max(2, n - step)
        if not probe(candidate, "refine"):
            break
        n = candidate
    return n


# --- GA-backed wrappers ----------------------------------------------------

def reliability(problem: TrapProblem, n: int, crit: ReliabilityCriterion, config: GAConfig,
                streams: StreamFamily, pool: WorkerPool | None = None) -> ReliabilityReport:
    """`crit.runs` fixed-size runs at size n; run i uses ``streams.generator(i)``."""
    if n < 2:
        raise ValueError(f"population size must be >= 2, got {n}")
    pool = pool or WorkerPool()
    outcomes = pool.replicate(problem, constant_schedule(n), config, streams, crit.runs)
    return ReliabilityReport.from_outcomes(n, outcomes, crit)


class _Prober:
    """Caches reports by size and keeps the audit trail in probe order."""

    def __init__(self, problem, crit, config, streams, pool):
        self.problem, self.crit, self.config = problem, crit, config
        self.streams, self.pool = streams, pool
        self.cache: dict[int, ReliabilityReport] = {}
        self.trail: list[tuple[str, ReliabilityReport]] = []

    def __call__(self, n: int, phase: str) -> bool:
        rep = self.cache.get(n)
        if rep is None:
            rep = reliability(self.problem, n, self.crit, self.config,
                              self.streams.child(n), self.pool)
            self.cache[n] = rep
        self.trail.append((phase, rep))
        logger.debug("%s %s n=%d sr=%.2f", self.problem, phase, n, rep.success_rate)
        return rep.passed


def _sizing_streams(problem: TrapProblem, streams: StreamFamily) -> StreamFamily:
    return streams.child(problem.l, problem.m, SIZING)


def bisection(problem: TrapProblem, initial_n: int = DEFAULT_INITIAL_N,
              crit: ReliabilityCriterion = ReliabilityCriterion(),
              config: GAConfig = GAConfig(), streams: StreamFamily = StreamFamily(0),
              pool: WorkerPool | None = None, threshold: float = DEFAULT_THRESHOLD,
              ceiling: int = DEFAULT_CEILING):
    """Returns (n', audit trail)."""
    prober = _Prober(problem, crit, config, _sizing_streams(problem, streams), pool)
    n = bisect_size(prober, initial_n, threshold, ceiling)
    return n, list(prober.trail)


def refine(problem: TrapProblem, n_prime: int,
           crit: ReliabilityCriterion = ReliabilityCriterion(),
           config: GAConfig = GAConfig(), streams: StreamFamily = StreamFamily(0),
           pool: WorkerPool | None = None) -> int:
    prober = _Prober(problem, crit, config, _sizing_streams(problem, streams), pool)
    return refine_size(prober, n_prime)


def estimate_gmax(report: ReliabilityReport, statistic: str = "mean") -> int:
    """Ceiling of the chosen statistic of successful-run generations, at least 1."""
    gens = report.successful_generations
    if not gens:
        raise EstimationError(f"no successful run at n={report.size} to estimate g_max from")
    if statistic == "mean":
        value = statistics.fmean(gens)
    elif statistic == "median":
        value = statistics.median(gens)
    elif statistic == "max":
        value = max(gens)
    else:
        raise ValueError(f"unknown g_max statistic {statistic!r}")
    # guard against fmean landing a hair above an integer
    return max(1, math.ceil(round(value, 9)))


def size_population(problem: TrapProblem, crit: ReliabilityCriterion = ReliabilityCriterion(),
                    config: GAConfig = GAConfig(), streams: StreamFamily = StreamFamily(0),
                    pool: WorkerPool | None = None, initial_n: int = DEFAULT_INITIAL_N,
                    threshold: float = DEFAULT_THRESHOLD, ceiling: int = DEFAULT_CEILING,
                    gmax_statistic: str = "mean") -> SizingResult:
    """Bisection, refinement and horizon estimate in one pass with a shared cache."""
    prober = _Prober(problem, crit, config, _sizing_streams(problem, streams), pool)
    n_bis = bisect_size(prober, initial_n, threshold, ceiling)
    n_ref = refine_size(prober, n_bis)
    g_max = estimate_gmax(prober.cache[n_ref], gmax_statistic)
    logger.info("%s: bisection %d, refined %d, g_max %d", problem, n_bis, n_ref, g_max)
    return SizingResult(n_bis, n_ref, g_max, tuple(prober.trail))


AUDIT_COLUMNS = ("phase", "candidate_n", "successes", "runs", "success_rate",
                 "aes_mean", "aes_std", "gen_mean")


def audit_rows(result: SizingResult) -> list[dict]:
    return [
        {
            "phase": phase,
            "candidate_n": rep.size,
            "successes": rep.successes,
            "runs": rep.runs,
            "success_rate": rep.success_rate,
            "aes_mean": rep.aes_mean,
            "aes_std": rep.aes_std,
            "gen_mean": rep.generations_mean,
        }
        for phase, rep in result.reports
    ]
