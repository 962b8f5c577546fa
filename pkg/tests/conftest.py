import sys
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from breather_lab.grid import Grid
from breather_lab.model import BreatherParams, make_model

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def sg():
    return make_model("sine_gordon")


@pytest.fixture(scope="session")
def grid_q():
    return Grid(30.0, 2001)


@pytest.fixture(scope="session")
def params02():
    return BreatherParams.from_eps(0.2)


@pytest.fixture(scope="session")
def grid02():
    """Default evolution grid for eps = 0.2."""
    return Grid(150.0, 4001)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(results):
            terminalreporter.write_line(results[cid].line())
