"""Deterministic population shrinkage schedules.

The population size at generation g follows

    n_g = n0 * (1 - (1 - rho) * (g / g_max) ** tau)    for g <= g_max
    n_g = n_{g_max}                                     for g >  g_max

rounded half-up to an integer, floored at 2 and forced non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["SvpsSchedule", "constant_schedule", "round_half_up", "size_at"]

MIN_SIZE = 2


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class SvpsSchedule:
    """Shrinking-population schedule with speed `tau` and severity `rho`.

    Small `tau` shrinks early; `rho` is the fraction of `n0` left at `g_max`.
    `rho == 1` keeps the size constant.
    """

    n0: int
    tau: float = 1.0
    rho: float = 1.0
    g_max: int = 1

    def __post_init__(self):
        if self.n0 < MIN_SIZE:
            raise ValueError(f"n0 must be >= {MIN_SIZE}, got {self.n0}")
        if self.g_max < 1:
            raise ValueError(f"g_max must be >= 1, got {self.g_max}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in ]0, 1], got {self.rho}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be a positive finite number, got {self.tau}")

    @cached_property
    def final_size(self) -> int:
        return max(MIN_SIZE, round_half_up(self.rho * self.n0))

    @cached_property
    def sizes(self) -> np.ndarray:
        """Sizes for g = 0 .. g_max (int64); later generations repeat the last."""
        if self.rho == 1:
            return np.array([self.n0], dtype=np.int64)
        out = np.empty(self.g_max + 1, dtype=np.int64)
        out[0] = self.n0
        prev = self.n0
        for g in range(1, self.g_max):
            raw = self.n0 * (1.0 - (1.0 - self.rho) * (g / self.g_max) ** self.tau)
            prev = max(self.final_size, min(prev, round_half_up(raw)))
            out[g] = prev
        out[self.g_max] = self.final_size
        return out

    def size_at(self, g: int) -> int:
        if g < 0:
            raise ValueError(f"generation index must be >= 0, got {g}")
        sizes = self.sizes
        return int(sizes[min(g, sizes.size - 1)])

    def planned_evaluations(self) -> int:
        """Sum of sizes over g = 0 .. g_max."""
        return sum(self.size_at(g) for g in range(self.g_max + 1))


def size_at(s: SvpsSchedule, g: int) -> int:
    return s.size_at(g)


def constant_schedule(n: int) -> SvpsSchedule:
    """Fixed-size GA: the rho = 1 special case."""
    return SvpsSchedule(n0=n, tau=1.0, rho=1.0, g_max=1)
