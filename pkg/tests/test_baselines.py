import math

import numpy as np
import pytest

from nmcs.baselines import (
    GaParams,
    SaParams,
    ga_minimize,
    metropolis_accept,
    sa_minimize,
    temperature_at,
)
from nmcs.objective import ObjectiveSpec

from conftest import CallCounter, sphere


def test_sa_sphere(sphere2):
    assert sa_minimize(sphere2, SaParams(), [(3, 3)], 1500, 1).best_value < 1e-2


def test_sa_improvement_always_accepted():
    rng = np.random.default_rng(0)
    assert all(metropolis_accept(-1e-9, 1e-300, rng) for _ in range(100))
    assert all(metropolis_accept(-5.0, 100.0, rng) for _ in range(100))


@pytest.mark.parametrize("delta, temperature", [(1.0, 1.0), (0.3, 2.0), (5.0, 10.0)])
def test_sa_acceptance_probability(delta, temperature):
    rng = np.random.default_rng(1)
    rate = np.mean([metropolis_accept(delta, temperature, rng) for _ in range(100_000)])
    assert abs(rate - math.exp(-delta / temperature)) < 0.02


def test_sa_zero_temperature_is_greedy(sphere2):
    # with cooling near zero the temperature underflows after the first step
    params = SaParams(t0=1.0, cooling=1e-200)
    assert temperature_at(params, 2) == 0.0
    rep = sa_minimize(sphere2, params, [(3, 3)], 500, 0)
    values = [v for _, v in rep.trace]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_sa_budget_split_and_bounds():
    counter = CallCounter(sphere)
    seen = []
    spec = ObjectiveSpec("s", 2, 0, 1, lambda x: (seen.append(np.array(x)), counter(x))[1])
    rep = sa_minimize(spec, SaParams(), [(0.5, 0.5), (0.9, 0.9), (0.1, 0.2)], 301, 3)
    assert rep.evals_used == counter.calls == 301
    pts = np.array(seen)
    assert np.all((pts >= 0) & (pts <= 1))
    # each start begins its share with an evaluation of the start itself
    starts = [i for i, p in enumerate(pts) if any(np.allclose(p, s) for s in [(0.9, 0.9), (0.1, 0.2)])]
    assert 101 in starts and 201 in starts


def test_sa_requires_starts(sphere2):
    with pytest.raises(ValueError):
        sa_minimize(sphere2, SaParams(), [], 10)


@pytest.mark.parametrize("kw", [{"t0": 0}, {"cooling": 1}, {"cooling": 0}, {"reanneal_interval": 0}])
def test_sa_param_validation(kw):
    with pytest.raises(ValueError):
        SaParams(**kw)


@pytest.mark.parametrize("kw", [{"elite_count": 15}, {"crossover_fraction": 1.5}, {"mutation_rate": -0.1}])
def test_ga_param_validation(kw):
    with pytest.raises(ValueError):
        GaParams(**kw)


def test_ga_sphere(sphere2):
    assert ga_minimize(sphere2, GaParams(), (), 1500, 0).best_value < 1e-2


def test_ga_generation_accounting():
    counter = CallCounter(sphere)
    spec = ObjectiveSpec("s", 2, -5, 5, counter)
    # initial population, then one generation: elites are not re-evaluated
    ga_minimize(spec, GaParams(), (), 15 + 13, 0)
    assert counter.calls == 28
    rep = ga_minimize(spec, GaParams(), (), 15 + 13 + 5, 0)
    assert rep.evals_used == 33


def test_ga_elitism_and_bounds():
    seen = []
    spec = ObjectiveSpec("s", 3, -1, 2, lambda x: (seen.append(np.array(x)), sphere(x))[1])
    rep = ga_minimize(spec, GaParams(), [(5, 5, 5)], 15 + 13 * 20, 4)
    pts = np.array(seen)
    assert np.all((pts >= -1) & (pts <= 2))
    values = [v for _, v in rep.trace]
    assert all(b <= a for a, b in zip(values, values[1:]))
    # generation-wise best: running min over each block of 13 children never rises
    gen_best = [min(sphere(p) for p in pts[:15])]
    for g in range(20):
        block = pts[15 + 13 * g: 15 + 13 * (g + 1)]
        gen_best.append(min(gen_best[-1], min(sphere(p) for p in block)))
    assert gen_best[-1] == rep.best_value


def test_ga_seeds_enter_population():
    seen = []
    spec = ObjectiveSpec("s", 2, -5, 5, lambda x: (seen.append(tuple(x)), sphere(x))[1])
    ga_minimize(spec, GaParams(), [(1, 1), (2, -2)], 15, 0)
    assert seen[:2] == [(1.0, 1.0), (2.0, -2.0)]


def test_baselines_deterministic(sphere2):
    assert sa_minimize(sphere2, SaParams(), [(1, 2)], 400, 5).same_run(
        sa_minimize(sphere2, SaParams(), [(1, 2)], 400, 5))
    assert ga_minimize(sphere2, GaParams(), (), 400, 5).same_run(
        ga_minimize(sphere2, GaParams(), (), 400, 5))
