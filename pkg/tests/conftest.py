import os

import pytest

os.environ.setdefault("PQSPEC_THREADS", "1")

# pass/fail lines collected by the acceptance suite, echoed in the summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_grid():
    from pqspec import Grid
    return Grid(0.0, 1.0, 8, 1.0, 4)


@pytest.fixture(scope="session")
def mid_grid():
    from pqspec import Grid
    return Grid(0.0, 1.0, 16, 2.0, 16)
