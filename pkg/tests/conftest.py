import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one ``criterion N: PASS|FAIL`` line; printed again in the terminal summary."""

    def record(number, title, ok, detail=""):
        line = f"criterion {number} [{title}]: {'PASS' if ok else 'FAIL'}" + (f"  {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
