import numpy as np
import pytest

from hodgekit.backends import DGLABackend, TorusBackend
from hodgekit.presets import obstructed_dgla, unobstructed_dgla

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus2():
    return TorusBackend(d=2, K=2, tau=1j, volume=1.0)


@pytest.fixture(scope="session")
def skew_torus():
    return TorusBackend(d=2, K=2, tau=0.3 + 1.1j, volume=2.5)


@pytest.fixture(scope="session")
def unobstructed():
    return DGLABackend(unobstructed_dgla())


@pytest.fixture(scope="session")
def obstructed():
    return DGLABackend(obstructed_dgla())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
