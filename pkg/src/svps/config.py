"""Experiment configuration: defaults < TOML file < command-line flags."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .experiment import SweepGrid
from .ga import GAConfig
from .sizing import DEFAULT_INITIAL_N, DEFAULT_THRESHOLD, ReliabilityCriterion


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    l_values: tuple[int, ...] = (2, 3, 4)
    m_values: tuple[int, ...] = (2, 4, 8, 16, 32, 64)
    master_seed: int = 0
    runs: int = 50
    required_successes: int = 49
    bisection_initial_n: int = DEFAULT_INITIAL_N
    bisection_threshold: float = DEFAULT_THRESHOLD
    tau_values: Optional[tuple[float, ...]] = None
    rho_values: Optional[tuple[float, ...]] = None
    gmax_statistic: str = "mean"
    t_test_variant: str = "welch"
    max_generations_multiplier: float = 10.0
    sizing_max_generations: int = 2000
    success_check: str = "generation"
    worker_count: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        for name in ("l_values", "m_values", "tau_values", "rho_values"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(value))
        if any(l < 2 for l in self.l_values):
            raise ConfigError(f"block sizes must be >= 2, got {self.l_values}")
        if any(m < 1 for m in self.m_values):
            raise ConfigError(f"block counts must be >= 1, got {self.m_values}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError(f"master_seed must be an unsigned 64-bit integer, got {self.master_seed}")
        if self.gmax_statistic not in ("mean", "median", "max"):
            raise ConfigError(f"gmax_statistic must be mean, median or max, got {self.gmax_statistic!r}")
        if self.t_test_variant not in ("welch", "pooled"):
            raise ConfigError(f"t_test_variant must be welch or pooled, got {self.t_test_variant!r}")
        if self.bisection_threshold <= 0:
            raise ConfigError("bisection_threshold must be positive")
        if self.max_generations_multiplier <= 0:
            raise ConfigError("max_generations_multiplier must be positive")
        try:
            self.criterion(), self.ga_config(), self.grid()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def criterion(self) -> ReliabilityCriterion:
        return ReliabilityCriterion(self.runs, self.required_successes)

    def ga_config(self) -> GAConfig:
        return GAConfig(max_generations=self.sizing_max_generations,
                        success_check=self.success_check)

    def grid(self) -> SweepGrid:
        kw = {}
        if self.tau_values is not None:
            kw["tau_values"] = self.tau_values
        if self.rho_values is not None:
            kw["rho_values"] = self.rho_values
        return SweepGrid(**kw)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def load_config(path: str | Path | None = None, **overrides) -> ExperimentConfig:
    """Read a TOML file of ExperimentConfig keys, then apply non-None overrides."""
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        unknown = set(data) - FIELDS
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
