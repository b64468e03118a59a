import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import arithmetic_tail, two_cycle
from vge.counting import (
    CountCurve,
    check_arithmetic,
    closed_path_lengths,
    count_paths,
    enumerate_paths,
    growth_rate,
    partial_eta,
)
from vge.errors import ResourceLimitError
from vge.graph import MetricGraph, TailFamily, path_length, merged_edge_order


def binary_oracle(R):
    return 2 ** (math.floor(R) + 1) - 2


def one_sqrt2_oracle(R):
    # a unit loops and b loops of length sqrt(2), in any order
    s = math.sqrt(2)
    total = 0
    for b in range(int(R / s) + 1):
        for a in range(int(R - b * s) + 1):
            if a + b and a + b * s <= R:
                total += math.comb(a + b, a)
    return total


def one_two_oracle(R):
    # compositions of n into parts 1 and 2, summed over 1 <= n <= R
    f = [1, 1]
    for n in range(2, int(R) + 1):
        f.append(f[-1] + f[-2])
    return sum(f[1:int(R) + 1])


def test_enumerate_one_one_R2():
    paths = list(enumerate_paths(MetricGraph.loops(1, 1), 0, 2))
    assert len(paths) == 6
    assert [p.total_length for p in paths] == [1, 1, 2, 2, 2, 2]


def test_enumerate_below_shortest():
    assert list(enumerate_paths(MetricGraph.loops(1, 1), 0, 0.5)) == []


def test_enumerate_arithmetic_tail():
    g = arithmetic_tail()
    table = merged_edge_order(g, 3)
    words = [tuple(int(table[i].length) for i in p.edges) for p in enumerate_paths(g, 0, 3)]
    assert sorted(words) == sorted([(1,), (2,), (3,), (1, 1), (1, 2), (2, 1), (1, 1, 1)])


def test_enumerate_sorted_and_consistent():
    g = MetricGraph.from_edges(2, [(0, 1, 0.7), (1, 0, 1.1), (0, 0, 1.3), (1, 1, 0.9)])
    paths = list(enumerate_paths(g, 0, 5.0))
    keys = [(p.total_length, p.edges) for p in paths]
    assert keys == sorted(keys)
    table = merged_edge_order(g, 4)
    for p in paths:
        for a, b in zip(p.edges, p.edges[1:]):
            assert table[a].target == table[b].source
        assert table[p.edges[0]].source == 0
        assert math.isclose(path_length(table, p.edges), p.total_length, rel_tol=1e-12)
    assert len(set(p.edges for p in paths)) == len(paths)
    assert count_paths(g, 0, [5.0]).counts[0] == len(paths)


def test_enumerate_cap():
    with pytest.raises(ResourceLimitError, match="100"):
        list(enumerate_paths(MetricGraph.loops(1, 1), 0, 30, cap=100))


def test_enumerate_K_too_small():
    with pytest.raises(ValueError):
        list(enumerate_paths(MetricGraph.loops(1, 1), 0, 2, K=1))


def test_count_one_one_grid():
    assert list(count_paths(MetricGraph.loops(1, 1), 0, [1, 2, 3]).counts) == [2, 6, 14]


def test_count_one_two():
    assert list(count_paths(MetricGraph.loops(1, 2), 0, [2]).counts) == [3]


def test_count_below_shortest():
    assert list(count_paths(MetricGraph.loops(1, 2), 0, [0.5]).counts) == [0]


@pytest.mark.parametrize("graph,oracle,R", [
    (MetricGraph.loops(1, 1), binary_oracle, 16),
    (MetricGraph.loops(1, 2), one_two_oracle, 20),
    (MetricGraph.loops(1, math.sqrt(2)), one_sqrt2_oracle, 14),
])
def test_count_against_closed_forms(graph, oracle, R):
    grid = np.arange(0.25, R + 1e-9, 0.25)
    got = count_paths(graph, 0, grid).counts
    assert list(got) == [oracle(r) for r in grid]


def test_count_two_cycle():
    # one path per word length; lengths alternate 1, 3, 4, 6, 7, ...
    got = count_paths(two_cycle(), 0, [0.5, 1, 2.9, 3, 4, 6, 7]).counts
    assert list(got) == [0, 1, 1, 2, 3, 4, 5]


def test_count_csv():
    text = count_paths(MetricGraph.loops(1, 1), 0, [1, 2]).to_csv()
    assert text == "R,count\n1,2\n2,6\n"


def test_count_grid_must_increase():
    with pytest.raises(ValueError):
        count_paths(MetricGraph.loops(1, 1), 0, [2, 1])


def test_partial_eta_matches_enumeration():
    g = MetricGraph.loops(1, math.sqrt(2))
    z = 0.9
    direct = sum(math.exp(-z * p.total_length) for p in enumerate_paths(g, 0, 8.0))
    assert partial_eta(g, 0, z, 8.0) == pytest.approx(direct, rel=1e-12)


def test_closed_lengths_one_one():
    assert closed_path_lengths(MetricGraph.loops(1, 1), 2) == [1, 1, 2, 2, 2, 2]


def test_closed_lengths_two_cycle():
    g = two_cycle()
    assert closed_path_lengths(g, 2) == []
    assert closed_path_lengths(g, 3) == [3, 3]


def test_arithmetic_integers():
    rep = check_arithmetic([1, 2, 3], 1e-9)
    assert rep.is_arithmetic and rep.d == pytest.approx(1.0)


def test_arithmetic_irrational():
    rep = check_arithmetic([1, math.sqrt(2)], 1e-9)
    assert not rep.is_arithmetic


def brute_divisor(lengths, tol, kmax=1000):
    # largest d = min/k fitting every length
    m = min(lengths)
    for k in range(1, kmax + 1):
        d = m / k
        if all(abs(x - d * round(x / d)) <= tol for x in lengths):
            return d
    return None


def test_arithmetic_half():
    xs = [1.0, 1.5, 2.0]
    rep = check_arithmetic(xs, 1e-9)
    assert rep.is_arithmetic
    assert rep.d == pytest.approx(brute_divisor(xs, 1e-9), abs=1e-12)
    assert rep.d == pytest.approx(0.5)


def test_arithmetic_witnesses_name_the_culprit():
    rep = check_arithmetic([2.0, 4.0, 2 * math.sqrt(2), 6.0])
    assert (2.0, 2 * math.sqrt(2)) in rep.witnesses


def test_arithmetic_empty():
    with pytest.raises(ValueError):
        check_arithmetic([])


def test_growth_exact_exponential():
    R = np.linspace(10, 20, 21)
    est = growth_rate(CountCurve(R, np.exp(2 * R)), window=1.0)
    assert abs(est.slope - 2) < 1e-12


def test_growth_one_one():
    R = np.arange(1, 21)
    est = growth_rate(count_paths(MetricGraph.loops(1, 1), 0, R), window=0.5)
    assert 0.68 <= est.slope <= 0.70


def test_growth_constant_flagged():
    est = growth_rate(CountCurve(np.arange(10.0), np.full(10, 7)), window=1.0)
    assert est.slope == 0 and est.degenerate


def test_growth_too_few_points():
    with pytest.raises(ValueError):
        growth_rate(CountCurve([1, 2, 3], [1, 2, 4]))
