import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "exact",
    deadline=None,
    derandomize=True,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "exact"))

from densalg.graded import Chart  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def r1():
    return Chart.of("x")


@pytest.fixture(scope="session")
def r11():
    return Chart.of("x", "xi:odd")


@pytest.fixture(scope="session")
def r22():
    return Chart.of("x", "y", "xi:odd", "eta:odd")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
