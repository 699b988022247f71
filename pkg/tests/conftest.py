import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from procura.cost_model import CostFunction  # noqa: E402

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def two_resource_cost() -> CostFunction:
    """u1^4 + (u1 + u2)^2 with the quartic and the square as separate components."""
    return CostFunction.sum_of([CostFunction.monomial(1.0, (4, 0)), CostFunction.power_of_sum((1, 1), 2)])


@pytest.fixture
def quad():
    return CostFunction.monomial(1.0, (2,))


@pytest.fixture
def cubic():
    return CostFunction.monomial(1.0, (3,))


@pytest.fixture
def two_res():
    return two_resource_cost()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
