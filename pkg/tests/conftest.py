import numpy as np
import pytest

from vbkde.density import get_density, panel
from vbkde.kernel import quintic

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def K():
    return quintic()


@pytest.fixture(scope="session")
def normal():
    return get_density("normal")


@pytest.fixture(scope="session")
def mixture():
    return get_density("mixture")


@pytest.fixture(scope="session")
def bump():
    return get_density("bump")


@pytest.fixture(scope="session")
def panel_densities():
    return panel()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
