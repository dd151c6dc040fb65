import pytest

ACCEPTANCE_LINES = []


def record_acceptance(number: int, passed: bool, detail: str):
    ACCEPTANCE_LINES.append((number, passed, detail))


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
