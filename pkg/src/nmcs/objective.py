"""Objective functions, evaluation budgets and run reports shared by all optimizers."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np


class OptimizationError(Exception):
    """Base class for errors raised by the optimizers."""


class BudgetExhausted(OptimizationError):
    """Raised when an objective call would exceed the evaluation budget."""


class DimensionMismatch(OptimizationError, ValueError):
    """Raised when a point does not have the objective's dimension."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """A bounded real objective ``f: R^d -> R``.

    ``evaluator`` must be deterministic and thread safe. ``known_optimum`` is an
    optional ``(point, value)`` pair used only for scoring.
    """

    name: str
    d: int
    lower: np.ndarray
    upper: np.ndarray
    evaluator: Callable[[np.ndarray], float]
    known_optimum: Optional[tuple] = None

    def __post_init__(self):
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.d,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.d,)).copy()
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if not np.all(lower < upper):
            raise ValueError(f"{self.name}: lower bounds must be below upper bounds")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def __call__(self, x) -> float:
        return float(self.evaluator(np.asarray(x, dtype=float)))

    def sample_uniform(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """Draw points uniformly in the box; infinite bounds are not supported."""
        shape = (self.d,) if size is None else (size, self.d)
        return rng.uniform(self.lower, self.upper, size=shape)


def clamp_to_bounds(x, spec: ObjectiveSpec) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.d:
        raise DimensionMismatch(f"expected {spec.d} coordinates, got {x.shape[-1]}")
    return np.clip(x, spec.lower, spec.upper)


@dataclass
class EvaluationBudget:
    max_evals: int
    used: int = 0

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be positive")
        if not 0 <= self.used <= self.max_evals:
            raise ValueError("used must lie in [0, max_evals]")

    @property
    def remaining(self) -> int:
        return self.max_evals - self.used

    @property
    def exhausted(self) -> bool:
        return self.used >= self.max_evals


@dataclass
class RunReport:
    best_point: np.ndarray
    best_value: float
    evals_used: int
    trace: list = field(default_factory=list)
    seed: Optional[int] = None
    wall_time: float = 0.0
    stopped: bool = False

    def same_run(self, other: "RunReport") -> bool:
        """Equality ignoring wall time."""
        return (
            np.array_equal(self.best_point, other.best_point)
            and self.best_value == other.best_value
            and self.evals_used == other.evals_used
            and self.trace == other.trace
            and self.seed == other.seed
            and self.stopped == other.stopped
        )


BudgetLike = Union[int, EvaluationBudget]


def as_budget(budget: BudgetLike) -> EvaluationBudget:
    if isinstance(budget, EvaluationBudget):
        return budget
    return EvaluationBudget(int(budget))


class CountedObjective:
    """Budgeted view of an objective that also tracks the best point ever seen.

    Every call costs exactly one unit of budget. The trace records
    ``(evals_used, best_value)`` each time the best value improves.
    """

    def __init__(self, spec: ObjectiveSpec, budget: BudgetLike):
        self.spec = spec
        self.budget = as_budget(budget)
        self.best_point: Optional[np.ndarray] = None
        self.best_value = np.inf
        self.trace: list = []
        self._started = time.perf_counter()

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def used(self) -> int:
        return self.budget.used

    def clamp(self, x) -> np.ndarray:
        return clamp_to_bounds(x, self.spec)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.spec.d,):
            raise DimensionMismatch(f"expected shape ({self.spec.d},), got {x.shape}")
        if self.budget.exhausted:
            raise BudgetExhausted(f"budget of {self.budget.max_evals} evaluations spent")
        value = self.spec(x)
        self.budget.used += 1
        if value < self.best_value or self.best_point is None:
            self.best_value = value
            self.best_point = x.copy()
            self.trace.append((self.budget.used, value))
        return value

    def report(self, seed: Optional[int] = None, stopped: bool = False) -> RunReport:
        if self.best_point is None:
            raise OptimizationError("no evaluations were performed")
        return RunReport(
            best_point=self.best_point.copy(),
            best_value=float(self.best_value),
            evals_used=self.budget.used,
            trace=list(self.trace),
            seed=seed,
            wall_time=time.perf_counter() - self._started,
            stopped=stopped,
        )


def evaluate_counted(spec: ObjectiveSpec, budget: EvaluationBudget, x: Sequence[float]) -> float:
    """One budgeted evaluation of ``spec`` at ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.d,):
        raise DimensionMismatch(f"expected {spec.d} coordinates, got shape {x.shape}")
    if budget.exhausted:
        raise BudgetExhausted(f"budget of {budget.max_evals} evaluations spent")
    value = spec(x)
    budget.used += 1
    return value


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
