"""Generational selectorecombinative GA (tournament + one-point crossover).

There is no mutation: once an allele disappears from a locus it is gone for
good, so a population of identical genomes is absorbing and terminates the
run as a failure.

The per-generation size comes from a schedule; the fixed-size GA is simply a
constant schedule. The inner loop is compiled with numba and consumes the
same `numpy.random.Generator` the caller passes in, so a run is a pure
function of its inputs and the generator's state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional

import numba as nb
import numpy as np

from .schedule import SvpsSchedule
from .trap import Genome, TrapProblem, evaluate_population

__all__ = [
    "EvalCounter",
    "GAConfig",
    "Population",
    "RunOutcome",
    "Termination",
    "binary_tournament",
    "is_fixated",
    "next_generation",
    "one_point_crossover",
    "random_population",
    "run",
]

_OPTIMUM, _FIXATION, _CAP = 0, 1, 2


class Termination(str, enum.Enum):
    OPTIMUM_FOUND = "optimum_found"
    FIXATION = "fixation"
    GENERATION_CAP = "generation_cap"


_CODES = {
    _OPTIMUM: Termination.OPTIMUM_FOUND,
    _FIXATION: Termination.FIXATION,
    _CAP: Termination.GENERATION_CAP,
}


@dataclass(frozen=True)
class GAConfig:
    crossover_probability: float = 1.0
    tournament_size: int = 2
    max_generations: int = 2000
    count_initial_evaluations: bool = True
    # "generation": the generation that produces the optimum is charged in
    # full; "evaluation": charge up to the exact evaluation that found it.
    success_check: str = "generation"

    def __post_init__(self):
        if not 0 <= self.crossover_probability <= 1:
            raise ValueError(
                f"crossover probability must lie in [0, 1], got {self.crossover_probability}"
            )
        if self.tournament_size < 2:
            raise ValueError(f"tournament size must be >= 2, got {self.tournament_size}")
        if self.max_generations < 1:
            raise ValueError(f"max_generations must be >= 1, got {self.max_generations}")
        if self.success_check not in ("generation", "evaluation"):
            raise ValueError(
                f"success_check must be 'generation' or 'evaluation', got {self.success_check!r}"
            )

    def with_cap(self, max_generations: int) -> GAConfig:
        return replace(self, max_generations=max(1, int(max_generations)))


@dataclass(frozen=True)
class RunOutcome:
    success: bool
    evaluations_to_solution: Optional[int]
    total_evaluations: int
    generations: int
    termination: Termination


@dataclass
class Population:
    """Genomes as rows of an (n, length) uint8 matrix, with cached fitness."""

    genomes: np.ndarray
    fitness: np.ndarray
    generation: int = 0

    def __len__(self) -> int:
        return self.genomes.shape[0]

    def __getitem__(self, i: int) -> Genome:
        return Genome(self.genomes[i])

    @classmethod
    def from_genomes(cls, genomes, problem: TrapProblem, generation: int = 0) -> Population:
        mat = np.array([np.asarray(g.bits if isinstance(g, Genome) else g) for g in genomes],
                       dtype=np.uint8)
        return cls(mat, evaluate_population(mat, problem), generation)


class EvalCounter:
    """Running count of fitness evaluations."""

    def __init__(self, count: int = 0):
        self.count = count

    def add(self, k: int):
        self.count += k


# --- compiled kernels -------------------------------------------------------

@nb.njit(cache=True)
def _tournament(fitness, n, k, rng):
    # first-drawn wins ties
    best = rng.integers(0, n)
    best_f = fitness[best]
    for _ in range(k - 1):
        j = rng.integers(0, n)
        if fitness[j] > best_f:
            best = j
            best_f = fitness[j]
    return best


@nb.njit(cache=True)
def _cut_point(length, pc, rng):
    if length < 2:
        return length
    if pc >= 1.0 or rng.random() < pc:
        return rng.integers(1, length)
    return length


@nb.njit(cache=True)
def _breed(parents, fitness, target, pc, k, rng, out):
    n, length = parents.shape
    i = 0
    while i < target:
        a = _tournament(fitness, n, k, rng)
        b = _tournament(fitness, n, k, rng)
        cut = _cut_point(length, pc, rng)
        for j in range(cut):
            out[i, j] = parents[a, j]
        for j in range(cut, length):
            out[i, j] = parents[b, j]
        if i + 1 < target:
            for j in range(cut):
                out[i + 1, j] = parents[b, j]
            for j in range(cut, length):
                out[i + 1, j] = parents[a, j]
        i += 2


@nb.njit(cache=True)
def _row_fitness(genomes, r, table, m, l):
    f = 0.0
    pos = 0
    for _ in range(m):
        u = 0
        for _ in range(l):
            u += genomes[r, pos]
            pos += 1
        f += table[u]
    return f


@nb.njit(cache=True)
def _fixated(genomes, n):
    length = genomes.shape[1]
    for i in range(1, n):
        for j in range(length):
            if genomes[i, j] != genomes[0, j]:
                return False
    return True


@nb.njit(cache=True)
def _run_kernel(pop, fitness, table, m, l, optimum, tol, sizes, max_generations,
                pc, k, count_initial, per_evaluation, rng):
    """Returns (success, evals_to_solution, total_evals, generations, code)."""
    n0, length = pop.shape
    evals = n0 if count_initial else 0
    for i in range(n0):
        if fitness[i] >= optimum - tol:
            if not count_initial:
                return True, 0, 0, 0, _OPTIMUM
            ets = i + 1 if per_evaluation else n0
            return True, ets, ets, 0, _OPTIMUM
    if _fixated(pop, n0):
        return False, -1, evals, 0, _FIXATION

    cap = 0
    for s in sizes:
        cap = max(cap, s)
    cur = np.empty((max(cap, n0), length), dtype=np.uint8)
    cur[:n0] = pop
    nxt = np.empty_like(cur)
    cur_f = np.empty(cur.shape[0])
    cur_f[:n0] = fitness
    nxt_f = np.empty_like(cur_f)
    n = n0
    last = sizes.size - 1
    for g in range(1, max_generations + 1):
        target = sizes[min(g, last)]
        _breed(cur[:n], cur_f[:n], target, pc, k, rng, nxt)
        for i in range(target):
            f = _row_fitness(nxt, i, table, m, l)
            nxt_f[i] = f
            if f >= optimum - tol:
                evals += i + 1 if per_evaluation else target
                return True, evals, evals, g, _OPTIMUM
        evals += target
        n = target
        cur, nxt = nxt, cur
        cur_f, nxt_f = nxt_f, cur_f
        if _fixated(cur, n):
            return False, -1, evals, g, _FIXATION
    return False, -1, evals, max_generations, _CAP


# --- public operators -------------------------------------------------------

def random_population(n: int, problem: TrapProblem, rng: np.random.Generator,
                      counter: EvalCounter | None = None) -> Population:
    """n uniformly random genomes, evaluated."""
    if n < 2:
        raise ValueError(f"population needs at least two members, got {n}")
    genomes = rng.integers(0, 2, size=(n, problem.genome_length), dtype=np.uint8)
    if counter is not None:
        counter.add(n)
    return Population(genomes, evaluate_population(genomes, problem), 0)


def binary_tournament(pop: Population, rng: np.random.Generator,
                      tournament_size: int = 2) -> int:
    """Index of the fittest of `tournament_size` uniform draws with replacement."""
    return int(_tournament(np.asarray(pop.fitness, dtype=np.float64), len(pop),
                           tournament_size, rng))


def one_point_crossover(p1: Genome, p2: Genome, rng: np.random.Generator,
                        crossover_probability: float = 1.0,
                        cut: int | None = None) -> tuple[Genome, Genome]:
    """Swap suffixes after a cut drawn uniformly from 1 .. L-1.

    Passing `cut` forces the cut point and consumes no randomness.
    """
    if len(p1) != len(p2):
        raise ValueError(f"parent lengths differ: {len(p1)} vs {len(p2)}")
    if cut is None:
        cut = int(_cut_point(len(p1), float(crossover_probability), rng))
    a, b = p1.bits, p2.bits
    return (Genome(np.concatenate([a[:cut], b[cut:]])),
            Genome(np.concatenate([b[:cut], a[cut:]])))


def next_generation(pop: Population, target_size: int, problem: TrapProblem,
                    rng: np.random.Generator, config: GAConfig = GAConfig(),
                    counter: EvalCounter | None = None) -> Population:
    """Breed exactly `target_size` offspring and replace the whole population.

    Offspring come in pairs (both children of one crossover); for odd sizes
    the last pairing contributes only its first child.
    """
    if target_size < 2:
        raise ValueError(f"target size must be >= 2, got {target_size}")
    out = np.empty((target_size, pop.genomes.shape[1]), dtype=np.uint8)
    _breed(np.ascontiguousarray(pop.genomes, dtype=np.uint8),
           np.asarray(pop.fitness, dtype=np.float64), target_size,
           float(config.crossover_probability), config.tournament_size, rng, out)
    if counter is not None:
        counter.add(target_size)
    return Population(out, evaluate_population(out, problem), pop.generation + 1)


def is_fixated(pop: Population) -> bool:
    g = pop.genomes
    return bool((g == g[0]).all())


def run(problem: TrapProblem, schedule: SvpsSchedule, config: GAConfig,
        rng: np.random.Generator, initial: Population | None = None) -> RunOutcome:
    """One GA run under `schedule`, stopping on optimum, fixation or the cap.

    With ``config.success_check == "evaluation"`` the run stops at the exact
    evaluation that first produces the optimum; by default the generation
    holding it is charged in full.
    """
    sizes = np.asarray(schedule.sizes, dtype=np.int64)
    if initial is None:
        initial = random_population(int(sizes[0]), problem, rng)
    optimum = problem.optimum
    success, ets, total, gens, code = _run_kernel(
        np.ascontiguousarray(initial.genomes, dtype=np.uint8),
        np.asarray(initial.fitness, dtype=np.float64),
        problem.table, problem.m, problem.l,
        optimum, 1e-9 * max(1.0, abs(optimum)),
        sizes, config.max_generations,
        float(config.crossover_probability), config.tournament_size,
        config.count_initial_evaluations, config.success_check == "evaluation", rng,
    )
    return RunOutcome(
        success=bool(success),
        evaluations_to_solution=int(ets) if success else None,
        total_evaluations=int(total),
        generations=int(gens),
        termination=_CODES[int(code)],
    )
