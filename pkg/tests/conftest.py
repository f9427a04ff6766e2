import cmath

import numpy as np
import pytest

from ellipbc.qseries import Bases


def polar(mod, arg):
    return mod * cmath.exp(1j * arg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bases():
    return Bases(polar(0.2, 0.3), polar(0.25, -0.7), polar(0.6, 0.4))


def random_points(rng, count, rho, spread=0.05):
    mods = rho * (1 + spread * rng.uniform(-1, 1, count))
    return [complex(m * np.exp(1j * a)) for m, a in zip(mods, rng.uniform(-np.pi, np.pi, count))]


def rel(a, b):
    return abs(a - b) / abs(b)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
