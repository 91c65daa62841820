import numpy as np
import pytest

from loopsoup import graph_ab, graph_abc

_ACCEPTANCE = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
    _ACCEPTANCE.append(line)
    print(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gab():
    return graph_ab()


@pytest.fixture
def gabc():
    return graph_abc()


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
