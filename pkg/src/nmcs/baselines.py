"""Simulated annealing and genetic algorithm baselines for the solar-cell comparisons.

Both are plain, documented stand-ins for the toolbox solvers usually quoted in
this kind of comparison; they are not bit-exact clones of any commercial code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .objective import (
    BudgetExhausted,
    BudgetLike,
    CountedObjective,
    ObjectiveSpec,
    RunReport,
    as_budget,
    make_rng,
)


@dataclass(frozen=True)
class SaParams:
    t0: float = 100.0
    cooling: float = 0.95
    reanneal_interval: int = 100

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must lie in (0, 1)")
        if self.reanneal_interval < 1:
            raise ValueError("reanneal_interval must be at least 1")


@dataclass(frozen=True)
class GaParams:
    pop_size: int = 15
    elite_count: int = 2
    crossover_fraction: float = 0.8
    mutation_rate: float = 0.01

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be at least 2")
        if not 0 <= self.elite_count < self.pop_size:
            raise ValueError("elite_count must lie in [0, pop_size)")
        if not 0 <= self.crossover_fraction <= 1:
            raise ValueError("crossover_fraction must lie in [0, 1]")
        if not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must lie in [0, 1]")


def metropolis_accept(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Always accept improvements; accept a worsening ``delta`` with probability ``exp(-delta/T)``."""
    if delta <= 0:
        return True
    if temperature <= 0:
        return False
    return rng.random() < math.exp(-delta / temperature)


def _unit_direction(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        v = rng.normal(size=d)
        norm = np.linalg.norm(v)
        if norm > 0:
            return v / norm


def temperature_at(params: SaParams, t: int) -> float:
    """Temperature ``t`` iterations after the last (re)anneal."""
    return params.t0 * params.cooling**t


def sa_minimize(
    spec: ObjectiveSpec,
    params: SaParams,
    starts: Sequence,
    budget: BudgetLike,
    rng=None,
) -> RunReport:
    """Simulated annealing from each start in turn, the budget split evenly between them.

    A move has length ``sqrt(T)`` in a uniformly random direction and is
    clamped to the bounds. After every ``reanneal_interval`` accepted moves
    the temperature is reset to ``t0``. The best point ever evaluated is
    returned.
    """
    if len(starts) == 0:
        raise ValueError("at least one start is required")
    rng = make_rng(rng)
    budget = as_budget(budget)
    f = CountedObjective(spec, budget)
    shares = np.full(len(starts), budget.remaining // len(starts))
    shares[: budget.remaining % len(starts)] += 1

    for start, share in zip(starts, shares):
        limit = f.used + int(share)
        if share < 1:
            continue
        try:
            x = f.clamp(start)
            fx = f(x)
            t = accepted = 0
            while f.used < limit:
                t += 1
                temperature = temperature_at(params, t)
                y = f.clamp(x + math.sqrt(temperature) * _unit_direction(rng, spec.d))
                fy = f(y)
                if metropolis_accept(fy - fx, temperature, rng):
                    x, fx = y, fy
                    accepted += 1
                    if accepted % params.reanneal_interval == 0:
                        t = 0
        except BudgetExhausted:
            break
    return f.report(seed=None)


def _tournament(rng: np.random.Generator, values: np.ndarray) -> int:
    a, b = rng.integers(len(values), size=2)
    return int(a if values[a] <= values[b] else b)


def ga_minimize(
    spec: ObjectiveSpec,
    params: GaParams,
    seeds: Sequence = (),
    budget: BudgetLike = 1500,
    rng=None,
) -> RunReport:
    """Generational GA with elitism, blend crossover and uniform per-gene mutation.

    ``seeds`` fill the start of the initial population, the rest is uniform in
    bounds. Each generation keeps ``elite_count`` individuals unchanged (they
    are not re-evaluated) and breeds ``pop_size - elite_count`` children:
    ``round(crossover_fraction * children)`` by blending two tournament
    winners, the rest as mutated copies of a tournament winner.
    """
    rng = make_rng(rng)
    f = CountedObjective(spec, budget)
    n, d = params.pop_size, spec.d
    seeds = [np.asarray(s, dtype=float) for s in seeds][:n]
    n_children = n - params.elite_count
    n_cross = int(round(params.crossover_fraction * n_children))

    pop = np.empty((n, d))
    values = np.full(n, np.inf)
    try:
        for i in range(n):
            pop[i] = f.clamp(seeds[i]) if i < len(seeds) else spec.sample_uniform(rng)
            values[i] = f(pop[i])
        while True:
            order = np.argsort(values, kind="stable")
            pop, values = pop[order], values[order]
            children = np.empty((n_children, d))
            for c in range(n_children):
                a = pop[_tournament(rng, values)]
                if c < n_cross:
                    b = pop[_tournament(rng, values)]
                    lam = rng.random(d)
                    child = lam * a + (1 - lam) * b
                else:
                    child = a.copy()
                    mask = rng.random(d) < params.mutation_rate
                    child[mask] = rng.uniform(spec.lower[mask], spec.upper[mask])
                children[c] = f.clamp(child)
            # evaluate before replacing so a budget cut leaves a consistent population
            child_values = np.empty(n_children)
            for c in range(n_children):
                child_values[c] = f(children[c])
            pop[params.elite_count :] = children
            values[params.elite_count :] = child_values
    except BudgetExhausted:
        pass
    return f.report(seed=None)
