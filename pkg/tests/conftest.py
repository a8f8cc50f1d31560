import numpy as np
import pytest

from stochns.noise import make_coloring
from stochns.nonlinearity import torus_table
from stochns.spectral import build_spectrum

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus16():
    return build_spectrum("torus", 16), torus_table(16)


@pytest.fixture(scope="session")
def torus32():
    return build_spectrum("torus", 32), torus_table(32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def coloring16(torus16):
    s, _ = torus16
    return make_coloring({"kind": "power", "gamma": 0.5, "amplitude": 0.5}, s)
