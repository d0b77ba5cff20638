from pathlib import Path

import pytest

from dcert.analyzer import analyze_program
from dcert.ir import parse_program
from dcert.policy import parse_policy

DATA = Path(__file__).parent / "data"

# filled by test_acceptance.py, printed once at the end of the run
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def run_program():
    return parse_program((DATA / "run.dct").read_text())


@pytest.fixture(scope="session")
def policy():
    return parse_policy((DATA / "policy.dcp").read_text())


@pytest.fixture(scope="session")
def default_policy():
    return parse_policy((DATA / "default.dcp").read_text())


@pytest.fixture(scope="session")
def genuine(run_program, policy):
    cert, _ = analyze_program(run_program, policy)
    return cert


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, ok = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number}. {name}")
