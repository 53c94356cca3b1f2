"""Two-sample t-tests from summary statistics and log-log power-law fits."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

__all__ = ["PowerLawError", "PowerLawFit", "SampleStats", "TTestResult", "fit_power_law", "t_test"]


@dataclass(frozen=True)
class SampleStats:
    mean: float
    std: float
    count: int

    @classmethod
    def of(cls, values: Sequence[float]) -> SampleStats:
        values = np.asarray(values, dtype=float)
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        return cls(float(values.mean()) if values.size else math.nan, std, int(values.size))


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p_value: float
    significant: bool


_UNDEFINED = TTestResult(math.nan, math.nan, math.nan, False)


def t_test(a: SampleStats, b: SampleStats, alpha: float = 0.05,
           variant: str = "welch") -> TTestResult:
    """Two-sided two-sample t-test of a.mean - b.mean.

    `variant` is "welch" (unequal variances, Welch-Satterthwaite df) or
    "pooled" (Student's equal-variance form). Samples with fewer than two
    observations, or zero spread with equal means, are never significant.
    """
    if variant not in ("welch", "pooled"):
        raise ValueError(f"unknown t-test variant {variant!r}")
    if a.count < 2 or b.count < 2 or not (math.isfinite(a.mean) and math.isfinite(b.mean)):
        return _UNDEFINED
    if a.std < 0 or b.std < 0:
        raise ValueError("standard deviations must be non-negative")
    diff = a.mean - b.mean
    va, vb = a.std ** 2 / a.count, b.std ** 2 / b.count
    if variant == "welch":
        se2 = va + vb
        df = se2 ** 2 / (va ** 2 / (a.count - 1) + vb ** 2 / (b.count - 1)) if se2 > 0 else math.nan
    else:
        df = a.count + b.count - 2
        pooled = ((a.count - 1) * a.std ** 2 + (b.count - 1) * b.std ** 2) / df
        se2 = pooled * (1 / a.count + 1 / b.count)
    if se2 == 0:
        if diff == 0:
            return _UNDEFINED
        # no spread at all: any difference is exact
        return TTestResult(math.copysign(math.inf, diff), df, 0.0, True)
    t = diff / math.sqrt(se2)
    p = float(2 * stats.t.sf(abs(t), df))
    return TTestResult(t, float(df), p, p < alpha)


class PowerLawError(ValueError):
    pass


@dataclass(frozen=True)
class PowerLawFit:
    """y = coefficient * x ** exponent, fitted by least squares in log-log space."""

    exponent: float
    coefficient: float
    r_squared: float
    points: int

    def __call__(self, x):
        return self.coefficient * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(points: Sequence[tuple[float, float]]) -> PowerLawFit:
    """Fit on the strictly positive points; needs at least three of them."""
    kept = [(x, y) for x, y in points if x > 0 and y > 0]
    if len(kept) < 3:
        raise PowerLawError(f"need >= 3 strictly positive points, got {len(kept)}")
    lx = np.log([x for x, _ in kept])
    ly = np.log([y for _, y in kept])
    if np.ptp(lx) == 0:
        raise PowerLawError("all x values are equal")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return PowerLawFit(float(slope), float(math.exp(intercept)), min(1.0, r2), len(kept))
