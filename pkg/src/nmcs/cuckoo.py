"""Cuckoo Search with Levy flights (Yang & Deb, 2009), used as a baseline.

Steps are drawn with Mantegna's algorithm. A generation is ``n`` cuckoo
proposals followed by one abandonment round in which the ``ceil(p_a * n)``
worst nests are rebuilt uniformly inside the bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .objective import BudgetExhausted, BudgetLike, CountedObjective, ObjectiveSpec, RunReport, make_rng


@dataclass(frozen=True)
class CsParams:
    n_nests: int = 15
    p_a: float = 0.25
    # None -> 1% of the box width per coordinate
    step_scale: Optional[float] = None
    levy_exponent: float = 1.5

    def __post_init__(self):
        if self.n_nests < 2:
            raise ValueError("cuckoo search needs at least two nests")
        if not 0 < self.p_a < 1:
            raise ValueError("p_a must lie in (0, 1)")
        if self.step_scale is not None and self.step_scale <= 0:
            raise ValueError("step_scale must be positive")
        if not 1 < self.levy_exponent <= 2:
            raise ValueError("levy_exponent must lie in (1, 2]")


def mantegna_sigma(levy_exponent: float) -> float:
    lam = levy_exponent
    num = math.gamma(1 + lam) * math.sin(math.pi * lam / 2)
    den = math.gamma((1 + lam) / 2) * lam * 2 ** ((lam - 1) / 2)
    return (num / den) ** (1 / lam)


def levy_step(levy_exponent: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Heavy-tailed step ``u / |v|^(1/lambda)`` with ``u ~ N(0, sigma_u^2)``, ``v ~ N(0, 1)``."""
    if not 1 < levy_exponent <= 2:
        raise ValueError("levy_exponent must lie in (1, 2]")
    sigma = mantegna_sigma(levy_exponent)
    u = rng.normal(0.0, sigma, size=size)
    v = rng.normal(0.0, 1.0, size=size)
    return u / np.abs(v) ** (1.0 / levy_exponent)


def abandon_count(p_a: float, n: int) -> int:
    # the best nest always survives
    return min(math.ceil(p_a * n), n - 1)


def cs_minimize(
    spec: ObjectiveSpec,
    params: CsParams,
    budget: BudgetLike,
    stop=None,
    seed=None,
) -> RunReport:
    """Minimize ``spec`` with plain Cuckoo Search.

    ``stop`` is an optional callable taking the sorted nest values and
    returning True to terminate; it is checked after every generation.
    """
    rng = make_rng(seed)
    f = CountedObjective(spec, budget)
    n, d = params.n_nests, spec.d
    if params.step_scale is None:
        step_scale = 0.01 * (spec.upper - spec.lower)
    else:
        step_scale = np.full(d, params.step_scale)
    n_abandon = abandon_count(params.p_a, n)

    nests = np.empty((n, d))
    values = np.full(n, np.inf)
    stopped = False
    try:
        for i in range(n):
            nests[i] = spec.sample_uniform(rng)
            values[i] = f(nests[i])
        while True:
            for _ in range(n):
                i = rng.integers(n)
                egg = f.clamp(nests[i] + step_scale * levy_step(params.levy_exponent, rng, d))
                f_egg = f(egg)
                j = _other_index(rng, n, i)
                if f_egg < values[j]:
                    nests[j], values[j] = egg, f_egg
            order = np.argsort(values, kind="stable")
            for j in order[n - n_abandon:]:
                nests[j] = spec.sample_uniform(rng)
                values[j] = f(nests[j])
            if stop is not None and stop(np.sort(values)):
                stopped = True
                break
    except BudgetExhausted:
        pass
    return f.report(seed=seed if isinstance(seed, int) else None, stopped=stopped)


def _other_index(rng: np.random.Generator, n: int, i: int) -> int:
    j = rng.integers(n - 1)
    return j + 1 if j >= i else j
