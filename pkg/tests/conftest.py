import pytest

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record and print the one-line verdict of an acceptance criterion."""
    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
