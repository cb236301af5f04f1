import functools

import pytest

from pencil_transit import models
from pencil_transit.degeneracy import analyze_crossing


@functools.lru_cache(maxsize=None)
def crossing(name: str):
    problem = getattr(models, name)()
    branches, data = analyze_crossing(problem)
    return problem, branches, data


@pytest.fixture(scope="session")
def graphene():
    return crossing("graphene")


@pytest.fixture(scope="session")
def lz():
    return crossing("lz")


@pytest.fixture(scope="session")
def wave():
    return crossing("wave")


@pytest.fixture(scope="session")
def random4():
    return crossing("random4")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
