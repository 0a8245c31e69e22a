import numpy as np
import pytest

from nmcs.objective import ObjectiveSpec


def sphere(x):
    return float(np.dot(x, x))


@pytest.fixture
def sphere2():
    return ObjectiveSpec("sphere", 2, -5.0, 5.0, sphere)


def make_sphere(d, lo=-5.0, hi=5.0):
    return ObjectiveSpec(f"sphere{d}", d, lo, hi, sphere)


class CallCounter:
    """Independent count of evaluator calls."""

    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.fn(x)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
