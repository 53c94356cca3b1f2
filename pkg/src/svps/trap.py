"""Unitation-based trap functions and their m-block concatenation."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

__all__ = [
    "Genome",
    "TrapParams",
    "TrapProblem",
    "evaluate",
    "evaluate_population",
    "make_problem",
    "optimum_fitness",
    "trap_value",
    "unitation",
]


@dataclass(frozen=True)
class TrapParams:
    """Shape of a single trap block.

    `l` is the block length, `a` the fitness of the deceptive local optimum
    (all zeros), `b` the fitness of the global optimum (all ones) and `z` the
    unitation at which the slope changes sign.
    """

    l: int
    a: float
    b: float
    z: int

    def __post_init__(self):
        if not 0 < self.z < self.l:
            raise ValueError(f"need 0 < z < l, got z={self.z}, l={self.l}")
        if self.a <= 0:
            raise ValueError(f"local optimum a must be positive, got {self.a}")
        if self.b <= self.a:
            raise ValueError(f"global optimum b={self.b} must exceed a={self.a}")

    @classmethod
    def default(cls, l: int) -> TrapParams:
        """The standard deceptive setting a = l-1, b = l, z = l-1."""
        if l < 2:
            raise ValueError(f"block length must be >= 2, got {l}")
        return cls(l=l, a=float(l - 1), b=float(l), z=l - 1)


@dataclass(frozen=True)
class TrapProblem:
    params: TrapParams
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"need at least one block, got m={self.m}")

    @property
    def l(self) -> int:
        return self.params.l

    @property
    def genome_length(self) -> int:
        return self.params.l * self.m

    @cached_property
    def table(self) -> np.ndarray:
        """Block fitness indexed by unitation, shape (l + 1,)."""
        return np.array([trap_value(u, self.params) for u in range(self.params.l + 1)])

    @property
    def optimum(self) -> float:
        return optimum_fitness(self)

    def __str__(self) -> str:
        return f"{self.l}-trap m={self.m}"


class Genome:
    """Immutable fixed-length bit string."""

    __slots__ = ("_bits",)

    def __init__(self, bits: Iterable[int] | np.ndarray):
        arr = np.array(bits, dtype=np.uint8).ravel()
        if arr.size and arr.max() > 1:
            raise ValueError("genome bits must be 0 or 1")
        arr.setflags(write=False)
        self._bits = arr

    @classmethod
    def from_string(cls, s: str) -> Genome:
        return cls([int(c) for c in s])

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def __len__(self) -> int:
        return self._bits.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash(self._bits.tobytes())

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    def __repr__(self) -> str:
        return f"Genome('{self}')"


def unitation(bits) -> int:
    """Number of one-bits."""
    if isinstance(bits, Genome):
        bits = bits.bits
    elif isinstance(bits, str):
        return bits.count("1")
    return int(np.count_nonzero(bits))


def trap_value(u: int, p: TrapParams) -> float:
    if not 0 <= u <= p.l:
        raise ValueError(f"unitation {u} outside [0, {p.l}]")
    if u <= p.z:
        return p.a * (p.z - u) / p.z
    # b * (u - z) / (l - z) keeps trap_value(l) == b exactly
    return p.b * (u - p.z) / (p.l - p.z)


def evaluate(g: Genome, prob: TrapProblem) -> float:
    """Sum of trap values over consecutive, non-overlapping l-bit blocks."""
    bits = g.bits if isinstance(g, Genome) else np.asarray(g, dtype=np.uint8)
    if bits.size != prob.genome_length:
        raise ValueError(
            f"genome length {bits.size} != problem length {prob.genome_length}"
        )
    counts = bits.reshape(prob.m, prob.l).sum(axis=1)
    return float(prob.table[counts].sum())


def evaluate_population(genomes: np.ndarray, prob: TrapProblem) -> np.ndarray:
    """Vectorised `evaluate` over the rows of an (n, l*m) 0/1 matrix."""
    genomes = np.asarray(genomes)
    if genomes.ndim != 2 or genomes.shape[1] != prob.genome_length:
        raise ValueError(
            f"expected shape (n, {prob.genome_length}), got {genomes.shape}"
        )
    counts = genomes.reshape(genomes.shape[0], prob.m, prob.l).sum(axis=2)
    return prob.table[counts].sum(axis=1)


def optimum_fitness(prob: TrapProblem) -> float:
    return prob.m * prob.params.b


def make_problem(l: int, m: int) -> TrapProblem:
    """m concatenated l-traps with the default deceptive parameters."""
    return TrapProblem(TrapParams.default(l), m)
