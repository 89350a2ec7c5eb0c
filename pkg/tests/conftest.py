from importlib import resources

import pytest

from macroforge.strips import load_task


def _data(name: str) -> str:
    return resources.files("macroforge.data").joinpath(name).read_text()


@pytest.fixture(scope="session")
def bw_domain() -> str:
    return _data("blocksworld.pddl")


@pytest.fixture(scope="session")
def bw2_problem() -> str:
    return _data("blocksworld-2.pddl")


@pytest.fixture
def bw2(bw_domain, bw2_problem):
    return load_task(bw_domain, bw2_problem)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
