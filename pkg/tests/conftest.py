from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from godhs.generate import build_flat, build_minimal

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def flat():
    return build_flat()


@pytest.fixture(scope="session")
def minimal():
    return build_minimal()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
