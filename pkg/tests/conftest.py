import numpy as np
import pytest

from renarea.scenarios import load_catalog
from renarea.solver import solve_cohomogeneity_one

_SOLVED = {}


def solved(entry_id):
    """Solve a catalog scenario once per session."""
    if entry_id not in _SOLVED:
        scn = load_catalog()[entry_id].scenario()
        _SOLVED[entry_id] = (scn, solve_cohomogeneity_one(scn))
    return _SOLVED[entry_id]


@pytest.fixture(scope="session")
def equatorial():
    return solved("equatorial")


@pytest.fixture(scope="session")
def cap():
    return solved("spherical_cap")


@pytest.fixture(scope="session")
def clifford():
    return solved("clifford_type")


@pytest.fixture(scope="session")
def disk2d():
    return solved("geodesic_circle_2d")


@pytest.fixture(scope="session")
def capcircle2d():
    return solved("cap_circle_2d")


@pytest.fixture(scope="session")
def annulus2d():
    return solved("annulus_2d")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def record(criterion, passed, detail):
    """Store one PASS/FAIL line for the acceptance summary."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
