import math

import pytest

from vge.graph import MetricGraph, TailFamily
from vge.origami import Origami

ACCEPTANCE_LINES = []


def record(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def two_cycle(l1=1.0, l2=2.0):
    return MetricGraph.from_edges(2, [(0, 1, l1), (1, 0, l2)])


def arithmetic_tail():
    return MetricGraph(1, (), (TailFamily(0, 0, "arithmetic", 0.0, 1.0),))


GRAPHS = {
    "one_one": MetricGraph.loops(1, 1),
    "one_two": MetricGraph.loops(1, 2),
    "one_sqrt2": MetricGraph.loops(1, math.sqrt(2)),
    "two_cycle": two_cycle(),
}


@pytest.fixture
def l3():
    return Origami.from_cycles(3, [(1, 2)], [(1, 3)])


@pytest.fixture
def torus():
    return Origami(1, [0], [0])
