import pytest

from _support import ACCEPTANCE_LINES, FRIENDS, grounded


@pytest.fixture(scope="session")
def friends2():
    return grounded(FRIENDS, k=2)


@pytest.fixture(scope="session")
def friends3():
    return grounded(FRIENDS, k=3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
