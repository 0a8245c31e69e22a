"""Cuckoo Search whose nests are Nelder-Mead simplexes (NMS-CS).

Instead of a Levy flight, a randomly chosen nest advances by one simplex
flip. If it then beats another random nest, that nest's ``p`` worst vertices
are overwritten by the better nest's vertices of rank ``2..p+1``; the donor's
best vertex is deliberately withheld so the colony does not collapse onto a
single point. Every ``k`` iterations the worst fraction ``p_a`` of the nests
is rebuilt around fresh random anchors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cuckoo import abandon_count
from .objective import (
    BudgetExhausted,
    BudgetLike,
    CountedObjective,
    ObjectiveSpec,
    OptimizationError,
    RunReport,
    make_rng,
)
from .simplex import FlipCoefficients, Simplex, flip, make_initial_simplex


STOP_RULES = ("std", "n_plus_1")


class RankUnavailable(OptimizationError, ValueError):
    """Raised when a migration asks for more non-best vertices than a simplex has."""


@dataclass(frozen=True)
class HybridParams:
    n_nests: int = 6
    p: int = 1
    # None -> 2 * n_nests
    k: Optional[int] = None
    p_a: float = 0.25
    init_scale_max: float = 0.25
    epsilon: float = 1e-7
    # None -> max(2, n_nests // 3), capped at n_nests
    N: Optional[int] = None
    coefficients: FlipCoefficients = field(default_factory=FlipCoefficients)
    centroid_excludes_worst: bool = True
    # "std": spread about the mean of the N best fitnesses;
    # "n_plus_1": spread about sum / (N + 1), which only fires as fitnesses approach 0
    stop_rule: str = "std"
    # stop as soon as the best value reaches this target (scored benchmark runs)
    target_value: Optional[float] = None

    def __post_init__(self):
        if self.n_nests < 1:
            raise ValueError("n_nests must be positive")
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0 < self.p_a < 1:
            raise ValueError("p_a must lie in (0, 1)")
        if self.init_scale_max <= 0:
            raise ValueError("init_scale_max must be positive")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.N is not None and not 1 <= self.N <= self.n_nests:
            raise ValueError("N must lie in [1, n_nests]")
        if self.stop_rule not in STOP_RULES:
            raise ValueError(f"stop_rule must be one of {STOP_RULES}")

    @property
    def period(self) -> int:
        return self.k if self.k is not None else 2 * self.n_nests

    @property
    def pool(self) -> int:
        if self.N is not None:
            return self.N
        return min(max(2, self.n_nests // 3), self.n_nests)

    def check_dimension(self, d: int) -> None:
        if self.p > d:
            raise ValueError(f"p={self.p} exceeds the dimension {d}")


@dataclass
class Colony:
    nests: list
    params: HybridParams

    def fitnesses(self) -> np.ndarray:
        return np.array([s.fitness for s in self.nests])

    def best_index(self) -> int:
        return int(np.argmin(self.fitnesses()))

    def __len__(self):
        return len(self.nests)


def _draw_scale(rng: np.random.Generator, upper: float) -> float:
    # open interval (0, upper)
    scale = 0.0
    while scale == 0.0:
        scale = rng.uniform(0.0, upper)
    return scale


def init_colony(
    f: CountedObjective,
    params: HybridParams,
    anchors: Sequence = (),
    rng: Optional[np.random.Generator] = None,
) -> Colony:
    """Build ``n_nests`` simplexes; missing anchors are drawn uniformly in bounds."""
    rng = make_rng(rng)
    params.check_dimension(f.d)
    anchors = [np.asarray(a, dtype=float) for a in anchors][: params.n_nests]
    nests = []
    for idx in range(params.n_nests):
        anchor = anchors[idx] if idx < len(anchors) else f.spec.sample_uniform(rng)
        scale = _draw_scale(rng, params.init_scale_max)
        nests.append(make_initial_simplex(anchor, scale, f))
    return Colony(nests, params)


def migrate(donor: Simplex, target: Simplex, p: int) -> Simplex:
    """Overwrite ``target``'s ``p`` worst vertices with ``donor``'s ranks ``2..p+1``.

    Values are copied, not re-evaluated. The donor's best vertex is never used.
    """
    n_vertices = len(donor.values)
    if p + 1 > n_vertices:
        raise RankUnavailable(f"cannot migrate {p} vertices without the donor's best")
    if p > len(target.values):
        raise RankUnavailable("target has too few vertices")
    vertices = target.vertices.copy()
    values = target.values.copy()
    vertices[-p:] = donor.vertices[1 : p + 1]
    values[-p:] = donor.values[1 : p + 1]
    return Simplex(vertices, values)


def stop_spread(fitnesses, N: int, rule: str = "std") -> float:
    """Spread ``sqrt(sum (f_i - m)^2)`` of the ``N`` best fitnesses.

    ``m`` is their mean for ``rule="std"``; for ``rule="n_plus_1"`` it is
    ``sum(f_i) / (N + 1)``, so equal fitnesses only pass when they are near zero.
    """
    best = np.sort(np.asarray(fitnesses, dtype=float))[:N]
    m = best.mean() if rule == "std" else best.sum() / (N + 1)
    return float(np.sqrt(np.sum((best - m) ** 2)))


def stop_check(colony_or_fitnesses, N: int, epsilon: float, rule: str = "std") -> bool:
    if isinstance(colony_or_fitnesses, Colony):
        fitnesses = colony_or_fitnesses.fitnesses()
    else:
        fitnesses = np.asarray(colony_or_fitnesses, dtype=float)
    if len(fitnesses) < N:
        raise ValueError(f"need at least {N} nests, got {len(fitnesses)}")
    return stop_spread(fitnesses, N, rule) < epsilon


def _already_has(target: Simplex, donor: Simplex, p: int) -> bool:
    # a repeated migration would duplicate a vertex and flatten the simplex for good
    incoming = donor.vertices[1 : p + 1]
    return any((target.vertices == v).all(axis=1).any() for v in incoming)


def is_abandon_iteration(t: int, k: int) -> bool:
    """Iterations ``t = k+1, 2k+1, ...`` (``mod(t, k) = 1`` with ``t = 1`` skipped)."""
    return t > 1 and (t - 1) % k == 0


def nmcs_minimize(
    spec: ObjectiveSpec,
    params: HybridParams = HybridParams(),
    anchors: Sequence = (),
    budget: BudgetLike = 10_000,
    seed=None,
    on_migrate: Optional[Callable[[Simplex, Simplex, Simplex], None]] = None,
    on_abandon: Optional[Callable[[int, list], None]] = None,
    on_iteration: Optional[Callable[[int, Colony], None]] = None,
) -> RunReport:
    """Minimize ``spec`` with the simplex-nest cuckoo search.

    Stops when the best ``N`` nest fitnesses agree to within ``epsilon``
    (only with at least two nests), when ``target_value`` is reached, or when
    the budget is spent. ``on_migrate(donor, target_before, target_after)`` and
    ``on_abandon(t, replaced_indices)`` and ``on_iteration(t, colony)`` are
    observation hooks for testing.
    """
    rng = make_rng(seed)
    params.check_dimension(spec.d)
    f = CountedObjective(spec, budget)
    n = params.n_nests
    k = params.period
    N = params.pool
    n_abandon = abandon_count(params.p_a, n)
    stopped = False

    def done(colony: Colony) -> bool:
        if params.target_value is not None and f.best_value <= params.target_value:
            return True
        return N >= 2 and stop_check(colony, N, params.epsilon, params.stop_rule)

    try:
        colony = init_colony(f, params, anchors, rng)
        t = 0
        while not (stopped := done(colony)):
            t += 1
            i = int(rng.integers(n))
            colony.nests[i], _ = flip(
                colony.nests[i], f, params.coefficients, params.centroid_excludes_worst
            )
            if n > 1:
                j = int(rng.integers(n - 1))
                j += j >= i
                donor, before = colony.nests[i], colony.nests[j]
                if donor.fitness < before.fitness and not _already_has(before, donor, params.p):
                    colony.nests[j] = migrate(donor, before, params.p)
                    if on_migrate is not None:
                        on_migrate(donor, before, colony.nests[j])
            if n_abandon and is_abandon_iteration(t, k):
                order = np.argsort(colony.fitnesses(), kind="stable")
                worst = [int(w) for w in order[n - n_abandon :]]
                if on_abandon is not None:
                    on_abandon(t, worst)
                for w in worst:
                    anchor = spec.sample_uniform(rng)
                    scale = _draw_scale(rng, params.init_scale_max)
                    colony.nests[w] = make_initial_simplex(anchor, scale, f)
            if on_iteration is not None:
                on_iteration(t, colony)
    except BudgetExhausted:
        pass
    return f.report(seed=seed if isinstance(seed, int) else None, stopped=stopped)
