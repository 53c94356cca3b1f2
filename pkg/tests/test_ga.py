import numba as nb
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from svps.ga import (
    EvalCounter,
    GAConfig,
    Population,
    Termination,
    binary_tournament,
    is_fixated,
    next_generation,
    one_point_crossover,
    random_population,
    run,
)
from svps.schedule import SvpsSchedule, constant_schedule
from svps.trap import Genome, evaluate, make_problem


@nb.njit
def _draw(rng, n, k):
    out = np.empty(k, dtype=np.int64)
    for i in range(k):
        out[i] = rng.integers(0, n)
    return out


def pop_of(strings, problem):
    return Population.from_genomes([Genome.from_string(s) for s in strings], problem)


def test_random_population_counts_evaluations():
    counter = EvalCounter()
    prob = make_problem(2, 2)
    pop = random_population(19, prob, np.random.default_rng(3), counter)
    assert len(pop) == 19 and pop.genomes.shape == (19, 4)
    assert counter.count == 19
    np.testing.assert_array_equal(pop.fitness, [evaluate(pop[i], prob) for i in range(19)])


def test_random_population_minimal():
    pop = random_population(2, make_problem(2, 1), np.random.default_rng(0))
    assert pop.genomes.shape == (2, 2)


def test_random_population_too_small():
    with pytest.raises(ValueError):
        random_population(1, make_problem(2, 2), np.random.default_rng(0))


def test_random_population_is_fair():
    pop = random_population(10_000, make_problem(4, 4), np.random.default_rng(11))
    per_locus = pop.genomes.mean(axis=0)
    # 6 sigma for 10,000 Bernoulli(1/2) draws is 0.03; pooled over 16 loci it is 0.0075
    assert np.all(np.abs(per_locus - 0.5) <= 0.03)
    assert 0.49 <= per_locus.mean() <= 0.51


def test_tournament_prefers_fitter():
    prob = make_problem(2, 1)
    pop = pop_of(["11", "01"], prob)  # fitness 2 and 0
    wins = [binary_tournament(pop, np.random.default_rng(s)) for s in range(400)]
    # index 1 only wins when both draws hit it
    assert 0.18 < wins.count(1) / 400 < 0.32


def test_tournament_tie_goes_to_first_draw():
    prob = make_problem(2, 1)
    pop = pop_of(["00", "00", "00"], prob)
    for seed in range(20):
        first = _draw(np.random.default_rng(seed), 3, 2)[0]
        assert binary_tournament(pop, np.random.default_rng(seed)) == first


def test_tournament_strict_improvement_replaces():
    prob = make_problem(2, 1)
    pop = pop_of(["11", "00"], prob)
    for seed in range(20):
        a, b = _draw(np.random.default_rng(seed), 2, 2)
        expected = 0 if 0 in (a, b) else 1
        assert binary_tournament(pop, np.random.default_rng(seed)) == expected


def test_tournament_singleton():
    pop = pop_of(["10"], make_problem(2, 1))
    assert binary_tournament(pop, np.random.default_rng(0)) == 0


def test_crossover_forced_cut():
    c1, c2 = one_point_crossover(Genome.from_string("0000"), Genome.from_string("1111"),
                                 np.random.default_rng(0), cut=2)
    assert (str(c1), str(c2)) == ("0011", "1100")


@given(st.text("01", min_size=2, max_size=40), st.integers(0, 2 ** 32))
def test_crossover_fixed_point(s, seed):
    g = Genome.from_string(s)
    assert one_point_crossover(g, g, np.random.default_rng(seed)) == (g, g)


@given(st.integers(2, 40), st.integers(0, 2 ** 32), st.data())
def test_crossover_conserves_alleles(length, seed, data):
    bits = st.lists(st.integers(0, 1), min_size=length, max_size=length)
    p1, p2 = Genome(data.draw(bits)), Genome(data.draw(bits))
    c1, c2 = one_point_crossover(p1, p2, np.random.default_rng(seed))
    np.testing.assert_array_equal(c1.bits + c2.bits, p1.bits + p2.bits)
    # a single cut: c1 is a prefix of p1 followed by a suffix of p2
    assert any(np.array_equal(c1.bits, np.concatenate([p1.bits[:c], p2.bits[c:]]))
               for c in range(1, length))


def test_crossover_probability_zero_copies():
    p1, p2 = Genome.from_string("0000"), Genome.from_string("1111")
    assert one_point_crossover(p1, p2, np.random.default_rng(1), 0.0) == (p1, p2)


def test_crossover_length_mismatch():
    with pytest.raises(ValueError):
        one_point_crossover(Genome.from_string("000"), Genome.from_string("11"),
                            np.random.default_rng(0))


def test_next_generation_fixed_size_counts():
    prob = make_problem(3, 4)
    counter = EvalCounter()
    pop = random_population(30, prob, np.random.default_rng(5), counter)
    nxt = next_generation(pop, len(pop), prob, np.random.default_rng(6), counter=counter)
    assert len(nxt) == 30 and nxt.generation == 1
    assert counter.count == 60
    np.testing.assert_array_equal(nxt.fitness, [evaluate(nxt[i], prob) for i in range(30)])


@pytest.mark.parametrize("target", [5, 6, 2, 13])
def test_next_generation_matches_operator_replay(target):
    prob = make_problem(3, 4)
    pop = random_population(9, prob, np.random.default_rng(8))
    got = next_generation(pop, target, prob, np.random.default_rng(42))
    rng = np.random.default_rng(42)
    expected = []
    while len(expected) < target:
        a = binary_tournament(pop, rng)
        b = binary_tournament(pop, rng)
        c1, c2 = one_point_crossover(pop[a], pop[b], rng)
        expected += [c1, c2]
    # odd sizes keep only the first child of the last pairing
    assert [got[i] for i in range(target)] == expected[:target]


def test_next_generation_on_fixated_population():
    prob = make_problem(2, 3)
    pop = pop_of(["101100"] * 7, prob)
    nxt = next_generation(pop, 5, prob, np.random.default_rng(0))
    assert all(str(nxt[i]) == "101100" for i in range(5))
    assert is_fixated(nxt)


def test_next_generation_rejects_tiny_target():
    prob = make_problem(2, 2)
    pop = random_population(4, prob, np.random.default_rng(0))
    with pytest.raises(ValueError):
        next_generation(pop, 1, prob, np.random.default_rng(0))


def test_is_fixated():
    prob = make_problem(2, 2)
    assert is_fixated(pop_of(["0101"] * 3, prob))
    assert not is_fixated(pop_of(["0101", "0111"], prob))


def test_alleles_never_reappear():
    prob = make_problem(3, 3)
    rng = np.random.default_rng(9)
    pop = random_population(12, prob, rng)
    present = [set(col) for col in pop.genomes.T]
    for _ in range(30):
        pop = next_generation(pop, 12, prob, rng)
        now = [set(col) for col in pop.genomes.T]
        assert all(n <= p for n, p in zip(now, present))
        present = now


@pytest.mark.parametrize("mode, expected", [("generation", 10), ("evaluation", 4)])
def test_run_detects_optimum_in_initial_population(mode, expected):
    prob = make_problem(2, 2)
    init = pop_of(["0000", "0100", "1000", "1111"] + ["0010"] * 6, prob)
    out = run(prob, constant_schedule(10), GAConfig(success_check=mode),
              np.random.default_rng(0), initial=init)
    assert out.success and out.termination is Termination.OPTIMUM_FOUND
    assert out.evaluations_to_solution == expected <= 10
    assert out.generations == 0


def test_run_clones_fixate_immediately():
    prob = make_problem(3, 2)
    init = pop_of(["110110"] * 8, prob)
    out = run(prob, constant_schedule(8), GAConfig(), np.random.default_rng(0), initial=init)
    assert not out.success
    assert out.termination is Termination.FIXATION
    assert out.generations <= 1
    assert out.evaluations_to_solution is None


def test_run_generation_cap():
    prob = make_problem(4, 16)
    out = run(prob, constant_schedule(400), GAConfig(max_generations=2),
              np.random.default_rng(1))
    assert out.termination is Termination.GENERATION_CAP
    assert out.generations == 2 and out.total_evaluations == 1200


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from(["generation", "evaluation"]),
       st.floats(0.1, 1.0), st.floats(0.2, 5.0))
def test_run_accounting(seed, mode, rho, tau):
    prob = make_problem(3, 4)
    sched = SvpsSchedule(40, tau, rho, 5)
    out = run(prob, sched, GAConfig(success_check=mode), np.random.default_rng(seed))
    planned = sum(sched.size_at(g) for g in range(out.generations + 1))
    assert out.success == (out.termination is Termination.OPTIMUM_FOUND)
    if out.success:
        assert out.evaluations_to_solution == out.total_evaluations
        if mode == "generation":
            assert out.total_evaluations == planned
        else:
            assert planned - sched.size_at(out.generations) < out.total_evaluations <= planned
    else:
        assert out.total_evaluations == planned


def test_run_is_deterministic():
    prob = make_problem(3, 8)
    a = [run(prob, SvpsSchedule(150, 2.0, 0.6, 10), GAConfig(), np.random.default_rng([4, i]))
         for i in range(10)]
    b = [run(prob, SvpsSchedule(150, 2.0, 0.6, 10), GAConfig(), np.random.default_rng([4, i]))
         for i in range(10)]
    assert a == b


def test_rho_one_equals_fixed_size():
    prob = make_problem(3, 4)
    for seed in range(10):
        fixed = run(prob, constant_schedule(60), GAConfig(), np.random.default_rng(seed))
        svps = run(prob, SvpsSchedule(60, 0.3, 1.0, 7), GAConfig(), np.random.default_rng(seed))
        assert fixed == svps


def test_small_instance_aes_near_reference():
    """2-trap m=2 with 19 individuals: reference AES 30.02 over 50 runs."""
    prob = make_problem(2, 2)
    outs = [run(prob, constant_schedule(19), GAConfig(), np.random.default_rng([2024, i]))
            for i in range(50)]
    aes = np.mean([o.evaluations_to_solution for o in outs if o.success])
    assert 15 <= aes <= 45


@pytest.mark.parametrize("kw", [dict(crossover_probability=1.5), dict(tournament_size=1),
                                dict(max_generations=0), dict(success_check="sometimes")])
def test_ga_config_validation(kw):
    with pytest.raises(ValueError):
        GAConfig(**kw)
