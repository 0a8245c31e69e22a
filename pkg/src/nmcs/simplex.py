"""Nelder-Mead simplex: data structure, the flip move and a standalone minimizer.

By default the centroid is taken over the ``d`` best vertices (the textbook
rule). ``centroid_excludes_worst=False`` averages all ``d + 1`` vertices
instead; that variant pulls every reflection back towards the worst point
and stalls on simple quadratics, so it is kept only for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .objective import (
    BudgetExhausted,
    BudgetLike,
    CountedObjective,
    ObjectiveSpec,
    RunReport,
)

# absolute offset for zero anchor coordinates (Pfeffer's initializer)
ZERO_COORD_DELTA = 0.00025


@dataclass(frozen=True)
class FlipCoefficients:
    reflect: float = 1.0
    expand: float = 2.0
    contract: float = 0.5
    shrink: float = 0.5

    def __post_init__(self):
        if not self.reflect > 0:
            raise ValueError("reflect must be positive")
        if not 0 < self.contract < 1:
            raise ValueError("contract must lie in (0, 1)")
        if not self.expand > 1:
            raise ValueError("expand must exceed 1")
        if not self.expand > self.reflect:
            raise ValueError("expand must exceed reflect")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


class Simplex:
    """``d + 1`` vertices with their objective values, sorted best first."""

    __slots__ = ("vertices", "values")

    def __init__(self, vertices, values, presorted: bool = False):
        vertices = np.array(vertices, dtype=float)
        values = np.array(values, dtype=float)
        if vertices.ndim != 2 or vertices.shape[0] != vertices.shape[1] + 1:
            raise ValueError(f"a simplex needs d+1 vertices of dimension d, got {vertices.shape}")
        if values.shape != (vertices.shape[0],):
            raise ValueError("one value per vertex is required")
        if not presorted:
            order = np.argsort(values, kind="stable")
            vertices, values = vertices[order], values[order]
        self.vertices = vertices
        self.values = values

    @property
    def d(self) -> int:
        return self.vertices.shape[1]

    @property
    def best(self) -> np.ndarray:
        return self.vertices[0]

    @property
    def fitness(self) -> float:
        return float(self.values[0])

    def copy(self) -> "Simplex":
        return Simplex(self.vertices.copy(), self.values.copy(), presorted=True)

    def spread(self) -> float:
        return float(np.std(self.values))

    def volume(self) -> float:
        """Hyper-volume ``|det(edges)| / d!``."""
        edges = self.vertices[1:] - self.vertices[0]
        return abs(float(np.linalg.det(edges))) / float(np.prod(np.arange(1, self.d + 1)))

    def __repr__(self):
        return f"Simplex(d={self.d}, best={self.fitness:.6g})"


def centroid(s: Simplex, excludes_worst: bool = False) -> np.ndarray:
    pts = s.vertices[:-1] if excludes_worst else s.vertices
    return pts.mean(axis=0)


def flip(
    s: Simplex,
    f: CountedObjective,
    c: FlipCoefficients = FlipCoefficients(),
    centroid_excludes_worst: bool = True,
) -> tuple[Simplex, int]:
    """Apply one Nelder-Mead iteration to a sorted simplex.

    Returns the new (sorted) simplex and the number of evaluations spent,
    which is 1, 2 or ``2 + d``. Trial points are clamped to the objective's
    bounds. ``s`` itself is never modified, so a ``BudgetExhausted`` raised
    mid-flip leaves the caller's simplex intact.
    """
    verts, vals = s.vertices, s.values
    f_best, f_second_worst, f_worst = vals[0], vals[-2], vals[-1]
    xc = centroid(s, centroid_excludes_worst)

    xr = f.clamp(xc + c.reflect * (xc - verts[-1]))
    fr = f(xr)
    spent = 1

    if fr < f_best:
        xe = f.clamp(xc + c.expand * (xr - xc))
        fe = f(xe)
        spent += 1
        new = (xe, fe) if fe < fr else (xr, fr)
    elif fr < f_second_worst:
        new = (xr, fr)
    else:
        if fr < f_worst:
            x_try = f.clamp(xc + c.contract * (xr - xc))
            threshold = fr
        else:
            x_try = f.clamp(xc - c.contract * (xr - xc))
            threshold = f_worst
        f_try = f(x_try)
        spent += 1
        if f_try <= threshold:
            new = (x_try, f_try)
        else:
            return _shrink(s, f, c.shrink, spent)

    vertices = verts.copy()
    values = vals.copy()
    vertices[-1], values[-1] = new
    return Simplex(vertices, values), spent


def _shrink(s: Simplex, f: CountedObjective, factor: float, spent: int) -> tuple[Simplex, int]:
    best = s.vertices[0]
    vertices = s.vertices.copy()
    values = s.values.copy()
    for i in range(1, len(vertices)):
        vertices[i] = f.clamp(best + factor * (vertices[i] - best))
        values[i] = f(vertices[i])
    return Simplex(vertices, values), spent + len(vertices) - 1


def initial_vertices(anchor, scale: float, spec: Optional[ObjectiveSpec] = None) -> np.ndarray:
    """Vertices around ``anchor``: vertex ``i`` moves coordinate ``i`` by ``scale * a_i``.

    A zero coordinate moves by ``scale * 0.00025`` instead. If clamping to the
    bounds would collapse a vertex onto the anchor, the step is taken in the
    opposite direction.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    anchor = np.asarray(anchor, dtype=float)
    d = anchor.size
    vertices = np.tile(anchor, (d + 1, 1))
    for i in range(d):
        a = anchor[i]
        step = scale * a if a != 0 else scale * ZERO_COORD_DELTA
        value = a + step
        if spec is not None:
            lo, hi = spec.lower[i], spec.upper[i]
            value = min(max(value, lo), hi)
            if value == a:
                value = min(max(a - step, lo), hi)
        vertices[i + 1, i] = value
    return vertices


def make_initial_simplex(anchor, scale: float, f: CountedObjective) -> Simplex:
    vertices = initial_vertices(f.clamp(anchor), scale, f.spec)
    values = [f(v) for v in vertices]
    return Simplex(vertices, values)


@dataclass(frozen=True)
class StoppingRule:
    """Stop once the simplex values' standard deviation falls below ``ftol``."""

    ftol: float = 1e-10

    def __call__(self, s: Simplex) -> bool:
        return s.spread() < self.ftol


def nms_minimize(
    spec: ObjectiveSpec,
    start: Union[Simplex, Sequence[float]],
    budget: BudgetLike,
    stop: Optional[StoppingRule] = None,
    coefficients: FlipCoefficients = FlipCoefficients(),
    scale: float = 0.1,
    centroid_excludes_worst: bool = True,
) -> RunReport:
    """Run Nelder-Mead until the budget is spent or ``stop`` fires.

    ``start`` is either a ready simplex (its values are trusted and not
    re-evaluated) or an anchor point around which one is built.
    """
    f = CountedObjective(spec, budget)
    stopped = False
    try:
        s = start.copy() if isinstance(start, Simplex) else make_initial_simplex(start, scale, f)
        if isinstance(start, Simplex):
            _seed_best(f, s)
        while True:
            if stop is not None and stop(s):
                stopped = True
                break
            s, _ = flip(s, f, coefficients, centroid_excludes_worst)
    except BudgetExhausted:
        pass
    return f.report(stopped=stopped)


def _seed_best(f: CountedObjective, s: Simplex) -> None:
    # a prebuilt simplex's values are already known; record them without spending budget
    if s.fitness < f.best_value:
        f.best_value = s.fitness
        f.best_point = s.best.copy()
        f.trace.append((f.used, s.fitness))
