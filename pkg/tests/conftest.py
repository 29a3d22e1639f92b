from __future__ import annotations

import pytest

from qfano.enumerator import Scenario, enumerate_with_audit, main_theorem_rows
from qfano.tables import load_fixtures


@pytest.fixture(scope="session")
def scenario() -> Scenario:
    return Scenario()


@pytest.fixture(scope="session")
def search(scenario):
    """(rows, audit) of the default search, run once per session."""
    return enumerate_with_audit(scenario)


@pytest.fixture(scope="session")
def rows(search):
    return search[0]


@pytest.fixture(scope="session")
def main_rows(rows, scenario):
    return main_theorem_rows(rows, scenario)


@pytest.fixture(scope="session")
def fixtures():
    return {t.name: t for t in load_fixtures()}


@pytest.fixture(scope="session")
def oracle_rows(scenario):
    from qfano.oracle import brute_force_oracle

    return brute_force_oracle(scenario)


ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance verdict; the terminal summary prints them all."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE[number] = (title, ok, detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
        terminalreporter.write_line(line + (f": {detail}" if detail else ""))
