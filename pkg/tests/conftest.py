import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from msrm import RobotParams

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# pass/fail lines collected by the acceptance tests
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("criterion", 1)[1]):
            terminalreporter.write_line(line)


@pytest.fixture
def params():
    return RobotParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
