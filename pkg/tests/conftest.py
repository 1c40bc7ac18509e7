"""Shared fixtures and the acceptance-summary reporter."""

from __future__ import annotations

from importlib import resources

import pytest

from h2margin import caseio

# Populated by tests/test_acceptance.py; printed after the run so the
# one-line-per-criterion summary is visible without -s.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def data_dir():
    return resources.files("h2margin") / "data"


@pytest.fixture(scope="session")
def ieee39(data_dir):
    return caseio.load_case(data_dir / "ieee39.case")


@pytest.fixture(scope="session")
def profiles24(data_dir):
    return caseio.load_profiles(data_dir / "profiles24.csv")
