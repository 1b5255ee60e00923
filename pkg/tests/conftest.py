import numpy as np
import pytest

from pressurelab import systems
from pressurelab.manifold import basis_for

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def doubling():
    return systems.make_doubling()


@pytest.fixture(scope="session")
def perturbed():
    return systems.make_expanding_circle(2, 0.05)


@pytest.fixture(scope="session")
def cat():
    return systems.make_cat_map()


@pytest.fixture(scope="session")
def basis1():
    return basis_for(1, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
