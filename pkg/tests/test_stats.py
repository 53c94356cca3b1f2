import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import ttest_ind_from_stats

from svps.stats import PowerLawError, SampleStats, fit_power_law, t_test


def test_welch_known_value():
    r = t_test(SampleStats(10, 1, 50), SampleStats(12, 1, 50))
    assert r.t == pytest.approx(-10.0)
    assert r.significant and r.p_value < 1e-12


def test_identical_samples():
    s = SampleStats(5.0, 2.0, 50)
    r = t_test(s, s)
    assert r.t == 0 and r.p_value == pytest.approx(1.0)
    assert not r.significant


def test_zero_spread():
    assert not t_test(SampleStats(3, 0, 10), SampleStats(3, 0, 10)).significant
    r = t_test(SampleStats(3, 0, 10), SampleStats(4, 0, 10))
    assert r.significant and r.t == -math.inf


def test_too_few_observations():
    r = t_test(SampleStats(1, 0, 1), SampleStats(5, 2, 50))
    assert math.isnan(r.t) and not r.significant


def test_unknown_variant():
    with pytest.raises(ValueError):
        t_test(SampleStats(1, 1, 5), SampleStats(1, 1, 5), variant="paired")


stat_draw = st.tuples(st.floats(0, 1e5), st.floats(0.1, 1e4), st.integers(2, 200))


@given(stat_draw, stat_draw, st.sampled_from(["welch", "pooled"]))
def test_against_scipy(a, b, variant):
    r = t_test(SampleStats(*a), SampleStats(*b), variant=variant)
    ref = ttest_ind_from_stats(*a, *b, equal_var=variant == "pooled")
    assert r.t == pytest.approx(ref.statistic, rel=1e-9, abs=1e-12)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-300)
    assert r.significant == (ref.pvalue < 0.05)


def test_sample_stats():
    s = SampleStats.of([1, 2, 3, 4])
    assert (s.mean, s.count) == (2.5, 4)
    assert s.std == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
    assert SampleStats.of([7]).std == 0
    assert math.isnan(SampleStats.of([]).mean)


def test_power_law_exact():
    pts = [(n, 2 * n ** 1.5) for n in (10, 20, 40, 80)]
    fit = fit_power_law(pts)
    assert fit.exponent == pytest.approx(1.5)
    assert fit.coefficient == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit(160) == pytest.approx(2 * 160 ** 1.5)


def test_power_law_constant():
    fit = fit_power_law([(10, 5), (20, 5), (40, 5)])
    assert fit.exponent == pytest.approx(0, abs=1e-12)


def test_power_law_drops_non_positive():
    fit = fit_power_law([(10, 10), (20, 20), (40, 40), (80, -3), (0, 1)])
    assert fit.points == 3 and fit.exponent == pytest.approx(1)


def test_power_law_needs_three_points():
    with pytest.raises(PowerLawError):
        fit_power_law([(1, 1), (2, 2)])
    with pytest.raises(PowerLawError):
        fit_power_law([(5, 1), (5, 2), (5, 3)])


@given(st.floats(-3, 3), st.floats(0.01, 100),
       st.lists(st.floats(1, 1e5), min_size=3, max_size=12, unique=True))
def test_power_law_recovers_noiseless(exponent, coef, xs):
    xs = sorted(xs)
    if xs[-1] / xs[0] < 1.5:
        return
    fit = fit_power_law([(x, coef * x ** exponent) for x in xs])
    assert fit.exponent == pytest.approx(exponent, abs=1e-6)
