import sys
from pathlib import Path

import pytest

CHILDREN = Path(__file__).parent / "children"


@pytest.fixture
def child():
    """Command line for one of the helper child processes."""

    def make(name, *args):
        return [sys.executable, str(CHILDREN / f"{name}.py"), *map(str, args)]

    return make


# lines recorded by test_acceptance, echoed after the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
