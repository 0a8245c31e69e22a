"""Classic low-dimensional test functions (Fan et al.; Chelouah & Siarry conventions)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .objective import ObjectiveSpec


def branin(x):
    x1, x2 = x
    return (
        (x2 - 5.1 / (4 * np.pi**2) * x1**2 + 5 / np.pi * x1 - 6) ** 2
        + 10 * (1 - 1 / (8 * np.pi)) * np.cos(x1)
        + 10
    )


def bohachevsky2(x):
    x1, x2 = x
    return x1**2 + 2 * x2**2 - 0.3 * np.cos(3 * np.pi * x1) - 0.4 * np.cos(4 * np.pi * x2) + 0.7


def goldstein_price(x):
    x1, x2 = x
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1**2 - 14 * x2 + 6 * x1 * x2 + 3 * x2**2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1**2 + 48 * x2 - 36 * x1 * x2 + 27 * x2**2)
    return a * b


_SHUBERT_I = np.arange(1, 6)


def shubert(x):
    x1, x2 = x
    i = _SHUBERT_I
    return float(np.sum(i * np.cos((i + 1) * x1 + i)) * np.sum(i * np.cos((i + 1) * x2 + i)))


def zakharov(x):
    x = np.asarray(x)
    s = np.sum(0.5 * np.arange(1, x.size + 1) * x)
    return float(np.sum(x**2) + s**2 + s**4)


def rosenbrock(x):
    x = np.asarray(x)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (x[:-1] - 1) ** 2))


_HARTMANN3_A = np.array([[3.0, 10, 30], [0.1, 10, 35], [3.0, 10, 30], [0.1, 10, 35]])
_HARTMANN3_C = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN3_P = np.array(
    [
        [0.3689, 0.1170, 0.2673],
        [0.4699, 0.4387, 0.7470],
        [0.1091, 0.8732, 0.5547],
        [0.038150, 0.5743, 0.8828],
    ]
)


def hartmann3(x):
    x = np.asarray(x)
    inner = np.sum(_HARTMANN3_A * (x - _HARTMANN3_P) ** 2, axis=1)
    return float(-np.sum(_HARTMANN3_C * np.exp(-inner)))


_SHEKEL_A = np.array(
    [[4.0, 4, 4, 4], [1, 1, 1, 1], [8, 8, 8, 8], [6, 6, 6, 6], [3, 7, 3, 7]]
)
_SHEKEL_C = np.array([0.1, 0.2, 0.2, 0.4, 0.4])


def shekel5(x):
    x = np.asarray(x)
    return float(-np.sum(1.0 / (np.sum((x - _SHEKEL_A) ** 2, axis=1) + _SHEKEL_C)))


@dataclass(frozen=True)
class BenchmarkFunction:
    spec: ObjectiveSpec
    optimum_value: float
    optimum_points: tuple

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def search_domain(self):
        return list(zip(self.spec.lower, self.spec.upper))

    def verify(self, tol: float = 1e-9) -> None:
        for point in self.optimum_points:
            value = self.spec(point)
            if abs(value - self.optimum_value) > tol:
                raise AssertionError(f"{self.name}: f({point}) = {value!r} != {self.optimum_value!r}")


def _bench(name, d, lower, upper, fn: Callable, value, points) -> BenchmarkFunction:
    points = tuple(np.asarray(p, dtype=float) for p in points)
    spec = ObjectiveSpec(name, d, lower, upper, fn, known_optimum=(points[0], value))
    bench = BenchmarkFunction(spec, value, points)
    bench.verify()
    return bench


# Optima of the multimodal functions were located by a dense grid or random
# sweep followed by a BFGS polish (see tests/oracles.py) and frozen here.
_BRANIN_OPT = 5 / (4 * np.pi)
_SHUBERT_OPT = -186.73090883102395
_SHUBERT_POINTS = [
    (5.482864207495, 4.858056878752),
    (4.858056878004, -0.800321099459),
    (-7.708313736389, -0.800321100516),
    (4.858056879981, -7.083506407867),
    (-7.083506405918, -7.708313733268),
    (5.482864202948, -7.708313735328),
]
_HARTMANN3_OPT = -3.862782147820756
_HARTMANN3_POINT = (0.114614340456, 0.555648849721, 0.852546953228)
_SHEKEL5_OPT = -10.15319967905823
_SHEKEL5_POINT = (4.000037151332, 4.000133276366, 4.000037153352, 4.000133275407)


def suite() -> list[BenchmarkFunction]:
    """The ten classic functions with their domains and known optima."""
    return [
        _bench(
            "RC", 2, [-5, 0], [10, 15], branin, _BRANIN_OPT,
            [(-np.pi, 12.275), (np.pi, 2.275), (3 * np.pi, 2.475)],
        ),
        _bench("B2", 2, -5, 10, bohachevsky2, 0.0, [(0, 0)]),
        _bench("GP", 2, -2, 2, goldstein_price, 3.0, [(0, -1)]),
        _bench("SH", 2, -10, 10, shubert, _SHUBERT_OPT, _SHUBERT_POINTS),
        _bench("Z2", 2, -5, 10, zakharov, 0.0, [(0, 0)]),
        _bench("R2", 2, -5, 10, rosenbrock, 0.0, [(1, 1)]),
        _bench("H3,4", 3, 0, 1, hartmann3, _HARTMANN3_OPT, [_HARTMANN3_POINT]),
        _bench("S4,5", 4, 0, 10, shekel5, _SHEKEL5_OPT, [_SHEKEL5_POINT]),
        _bench("R5", 5, -5, 10, rosenbrock, 0.0, [np.ones(5)]),
        _bench("R10", 10, -5, 10, rosenbrock, 0.0, [np.ones(10)]),
    ]


def get(name: str) -> BenchmarkFunction:
    for bench in suite():
        if bench.name.lower() == name.lower():
            return bench
    raise KeyError(name)


def error_vs_optimum(fn: BenchmarkFunction, value: float) -> float:
    return float(value) - fn.optimum_value
