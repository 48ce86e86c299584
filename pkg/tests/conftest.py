import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from uwbthroughput.fibre import make_default_profile, make_uniform_profile  # noqa: E402


@pytest.fixture(scope="session")
def default_fibre():
    return make_default_profile()


@pytest.fixture(scope="session")
def uniform_fibre():
    return make_uniform_profile()


_CRITERIA = []


@pytest.fixture(scope="session")
def criterion():
    """Record one acceptance line; returns the verdict so the test can assert on it."""

    def record(label, ok, detail):
        _CRITERIA.append(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
