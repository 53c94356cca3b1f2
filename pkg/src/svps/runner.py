"""Seeded replication of GA runs, optionally spread over worker processes.

Every replication owns a private generator derived from a coordinate tuple
(master seed, instance, phase, cell, run index) through
`numpy.random.SeedSequence`, which hashes the tuple. The outcome of a run
therefore depends only on its coordinates, never on which worker executed it
or in what order.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ga import GAConfig, RunOutcome, run
from .schedule import SvpsSchedule
from .trap import TrapProblem

logger = logging.getLogger(__name__)

# phase tags used as the third coordinate of every stream key
SIZING = 1
BASELINE = 2
SWEEP = 3
SINGLE = 4

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class StreamFamily:
    """A node in the hierarchy of seeded random streams."""

    master_seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed <= MASK64:
            raise ValueError(f"master seed must be an unsigned 64-bit integer, got {self.master_seed}")

    def child(self, *key: int) -> StreamFamily:
        return StreamFamily(self.master_seed, self.key + tuple(int(k) for k in key))

    def generator(self, *key: int) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.key + tuple(int(k) for k in key))
        return np.random.default_rng(seq)


@dataclass(frozen=True)
class Batch:
    """Runs `indices` of one (problem, schedule, config) cell."""

    problem: TrapProblem
    schedule: SvpsSchedule
    config: GAConfig
    streams: StreamFamily
    indices: tuple[int, ...]


def run_batch(batch: Batch) -> list[RunOutcome]:
    return [run(batch.problem, batch.schedule, batch.config, batch.streams.generator(i))
            for i in batch.indices]


class WorkerPool:
    """Executes batches serially (workers <= 1) or on a process pool.

    Results always come back in submission order.
    """

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))
        self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def map(self, batches: Sequence[Batch]) -> list[list[RunOutcome]]:
        if self.workers == 1 or len(batches) == 1:
            return [run_batch(b) for b in batches]
        if self._executor is None:
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        return list(self._executor.map(run_batch, batches))

    def replicate(self, problem: TrapProblem, schedule: SvpsSchedule, config: GAConfig,
                  streams: StreamFamily, runs: int) -> list[RunOutcome]:
        """`runs` independent runs; run i draws from ``streams.generator(i)``."""
        chunks = np.array_split(np.arange(runs), min(self.workers, runs))
        batches = [Batch(problem, schedule, config, streams, tuple(int(i) for i in c))
                   for c in chunks if c.size]
        return [o for part in self.map(batches) for o in part]


def replicate(problem: TrapProblem, schedule: SvpsSchedule, config: GAConfig,
              streams: StreamFamily, runs: int, pool: WorkerPool | None = None) -> list[RunOutcome]:
    return (pool or WorkerPool()).replicate(problem, schedule, config, streams, runs)
