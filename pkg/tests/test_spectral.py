import itertools
import math
import warnings

import numpy as np
import pytest

from conftest import GRAPHS, arithmetic_tail, two_cycle
from vge.counting import enumerate_paths, partial_eta
from vge.errors import ConvergenceError, TailConditionError
from vge.graph import MetricGraph, TailFamily, merged_edge_order
from vge.spectral import (
    build_truncation,
    entropy,
    eta,
    perron,
    residue,
    schur_W,
    tail_mass,
)

LOG2 = math.log(2)


def test_truncation_one_one_z0():
    t = build_truncation(MetricGraph.loops(1, 1), 0.0, 2)
    assert np.array_equal(t.entries, np.ones((2, 2)))


def test_truncation_one_two():
    s = 0.7
    t = build_truncation(MetricGraph.loops(1, 2), s, 2)
    row = [math.exp(-s), math.exp(-2 * s)]
    assert np.allclose(t.entries, [row, row], rtol=1e-15)


def test_truncation_two_cycle():
    t = build_truncation(two_cycle(), 0.0, 2)
    assert np.array_equal(t.entries, [[0, 1], [1, 0]])


def test_tail_mass_arithmetic():
    g = arithmetic_tail()
    brute = sum(math.exp(-n) for n in range(2, 10_002))
    assert tail_mass(g, 1.0, 1) == pytest.approx(math.exp(-2) / (1 - math.exp(-1)), rel=1e-14)
    assert tail_mass(g, 1.0, 1) >= brute
    assert tail_mass(g, 1.0, 0) == pytest.approx(0.5819767068693265, rel=1e-12)


def test_tail_mass_power_bounds_brute_sum():
    f = TailFamily(0, 0, "power", 0.5, 0.5)
    g = MetricGraph(1, (), (f,))
    for sigma in (0.5, 1.0, 3.0):
        for K in (0, 5, 40):
            brute = sum(math.exp(-sigma * f.length(n)) for n in range(K + 1, K + 10_001))
            assert tail_mass(g, sigma, K) >= brute


def test_tail_mass_finite_is_zero():
    assert tail_mass(MetricGraph.loops(1, 2), 1.0, 2) == 0.0


def test_tail_mass_needs_positive_sigma():
    with pytest.raises(ValueError):
        tail_mass(arithmetic_tail(), 0.0, 3)


def test_schur_scalar():
    W = schur_W(MetricGraph.loops(1, 1), LOG2, 1, 2)
    assert W.entries.shape == (1, 1)
    assert W.entries[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_schur_full_is_M():
    g = MetricGraph.from_edges(2, [(0, 1, 0.5), (1, 0, 1.0), (0, 0, 1.5)])
    W = schur_W(g, 0.8, 3, 3)
    assert np.allclose(W.entries, build_truncation(g, 0.8, 3).entries)


def test_schur_arithmetic_tail_limit():
    vals = [schur_W(arithmetic_tail(), LOG2, 1, K).entries[0, 0] for K in (5, 10, 40)]
    assert vals[0] < vals[1] < vals[2] <= 1.0
    assert vals[2] == pytest.approx(1.0, abs=1e-9)
    W = schur_W(arithmetic_tail(), LOG2, 1, 40)
    assert W.upper[0, 0] >= 1.0


def test_schur_tail_condition():
    # a tail block with row sum >= 1 cannot be certified
    with pytest.raises(TailConditionError):
        schur_W(MetricGraph.loops(1, 1, 1), 0.1, 1, 3)


def test_schur_consistency_finite():
    g = MetricGraph.from_edges(2, [(0, 1, 0.5), (1, 0, 1.0), (0, 0, 1.5), (1, 1, 2.0), (1, 0, 0.25)])
    K = 5
    sigma = entropy(g).h
    full = perron(build_truncation(g, sigma, K).entries).rho
    for k in (1, 2, 3, 4):
        try:
            W = schur_W(g, sigma, k, K)
        except TailConditionError:
            W = schur_W(g, sigma, k, K, certify=False)
        assert perron(W.entries, check=False).rho == pytest.approx(full, abs=1e-10)


def test_perron_permutation():
    pd = perron(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert pd.rho == pytest.approx(1.0, abs=1e-12)


def test_perron_ones():
    pd = perron(np.ones((2, 2)))
    assert pd.rho == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(pd.right, [1 / math.sqrt(2)] * 2)
    assert pd.left @ pd.right == pytest.approx(1.0)
    assert pd.residual <= 1e-10


def test_perron_scaled_ones():
    s = 0.3
    pd = perron(np.full((2, 2), math.exp(-s)))
    assert pd.rho == pytest.approx(2 * math.exp(-s), rel=1e-12)


def test_perron_zero_matrix():
    with pytest.raises(ConvergenceError):
        perron(np.zeros((3, 3)))


def test_perron_reducible_warns():
    with pytest.warns(RuntimeWarning):
        perron(np.array([[1.0, 1.0], [0.0, 0.5]]))


def test_perron_matches_eigvals():
    rng = np.random.default_rng(7)
    for _ in range(5):
        A = rng.random((6, 6))
        pd = perron(A)
        assert pd.rho == pytest.approx(max(abs(np.linalg.eigvals(A))), rel=1e-10)
        assert np.all(pd.right > 0) and np.all(pd.left > 0)


def test_entropy_one_one():
    res = entropy(MetricGraph.loops(1, 1))
    assert abs(res.h - LOG2) <= 1e-9
    lo, hi = res.bracket
    assert lo <= LOG2 <= hi


def test_entropy_single_loop_subexponential():
    res = entropy(MetricGraph.loops(1))
    assert res.subexponential and res.h == 0.0


def test_entropy_two_cycle_subexponential():
    assert entropy(two_cycle()).subexponential


def test_entropy_arithmetic_tail():
    res = entropy(arithmetic_tail())
    assert abs(res.h - LOG2) <= 1e-6
    assert res.ladder[0][:2] == (8, 40)
    hs = [r[2] for r in res.ladder]
    assert all(a <= b + 1e-12 for a, b in zip(hs, hs[1:]))


def test_entropy_one_two_golden():
    # e^{-h} + e^{-2h} = 1
    assert entropy(MetricGraph.loops(1, 2)).h == pytest.approx(math.log((1 + math.sqrt(5)) / 2), abs=1e-9)


def test_entropy_one_sqrt2_root():
    h = entropy(MetricGraph.loops(1, math.sqrt(2))).h
    assert math.exp(-h) + math.exp(-math.sqrt(2) * h) == pytest.approx(1.0, abs=1e-9)


def test_entropy_json():
    text = entropy(MetricGraph.loops(1, 1)).to_json()
    assert '"h": 0.69314718' in text and '"subexponential": false' in text


@pytest.mark.parametrize("name", ["one_one", "one_two", "one_sqrt2"])
def test_rho_decreasing_in_sigma(name):
    g = GRAPHS[name]
    K = g.edge_count
    rhos = [perron(build_truncation(g, s, K).entries).rho for s in np.linspace(0.1, 3.0, 10)]
    assert all(a > b for a, b in zip(rhos, rhos[1:]))


def test_eta_closed_form():
    v = eta(MetricGraph.loops(1, 1), 0, math.log(4))
    assert v.value == pytest.approx(1.0, abs=1e-10)
    assert v.series_tail_bound == 0.0


def test_eta_large_z():
    assert eta(MetricGraph.loops(1, 1), 0, 50.0).value < 1e-20


def test_eta_alternating_cycle():
    assert eta(two_cycle(1, 1), 0, math.log(3), h=0.0).value == pytest.approx(0.5, abs=1e-12)


def test_eta_needs_z_above_h():
    with pytest.raises(ValueError):
        eta(MetricGraph.loops(1, 1), 0, 0.5)


def test_eta_tail_graph_against_closed_form():
    # loops of every integer length: eta = q/(1-2q) with q = e^{-z}/(1-e^{-z})... in closed form
    z = 1.2
    q = math.exp(-z) / (1 - math.exp(-z))
    v = eta(arithmetic_tail(), 0, z, h=LOG2)
    assert abs(v.value - q / (1 - q)) <= v.series_tail_bound + 1e-12


def test_residue_one_one():
    r = residue(MetricGraph.loops(1, 1), 0, LOG2)
    assert r.residue == pytest.approx(1.0, abs=1e-4)
    assert r.residue_over_h == pytest.approx(1 / LOG2, abs=1e-3)


def test_residue_one_sqrt2_positive():
    g = MetricGraph.loops(1, math.sqrt(2))
    assert residue(g, 0, entropy(g).h).residue > 0


def test_residue_scaling():
    # scaling lengths by s scales h and the residue by 1/s
    s = 2.0
    g = MetricGraph.loops(1, math.sqrt(2))
    h = entropy(g).h
    gs = g.scaled(s)
    hs = entropy(gs).h
    assert hs == pytest.approx(h / s, rel=1e-9)
    r, rs = residue(g, 0, h).residue, residue(gs, 0, hs).residue
    assert rs == pytest.approx(r / s, rel=1e-4)


SMALL_GRAPHS = [
    MetricGraph.loops(1, 1),
    MetricGraph.loops(1, math.sqrt(2)),
    two_cycle(),
    MetricGraph.from_edges(3, [(0, 1, 0.5), (1, 2, 1.0), (2, 0, 1.5), (1, 0, 0.75), (2, 2, 2.0), (0, 2, 1.25)]),
]


@pytest.mark.parametrize("g", SMALL_GRAPHS)
@pytest.mark.parametrize("z", [0.3, 1.0])
def test_matrix_powers_are_path_sums(g, z):
    K = g.edge_count
    table = merged_edge_order(g, K)
    M = build_truncation(g, z, K).entries
    P = np.eye(K)
    for n in range(1, 5):
        P = P @ M
        for a in range(K):
            for b in range(K):
                total = 0.0
                for mid in itertools.product(range(K), repeat=n - 1):
                    word = (a,) + mid + (b,)
                    if all(table[u].target == table[v].source for u, v in zip(word, word[1:])):
                        total += math.exp(-z * sum(table[i].length for i in word))
                expected = math.exp(z * table[a].length) * total
                assert P[a, b] == pytest.approx(expected, rel=1e-10, abs=1e-300)
