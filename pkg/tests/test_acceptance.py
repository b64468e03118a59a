"""Acceptance criteria, each checked at its stated tolerance.

Every test prints one ``criterion N: PASS/FAIL`` line (collected again in
the terminal summary).  Run directly with ``python tests/test_acceptance.py``.
"""
import itertools
import json
import math
import sys
import time

import numpy as np
import pytest

from conftest import GRAPHS, arithmetic_tail, record
from vge.asymptotics import CONVERGENT, OSCILLATORY, analyze
from vge.cli import run
from vge.counting import count_paths, growth_rate, partial_eta
from vge.errors import NoSingularities, ResourceLimitError
from vge.graph import MetricGraph, merged_edge_order
from vge.origami import (
    Origami,
    cone_points,
    count_arcs,
    enumerate_saddles,
    hypothesis_check_surface,
    surface_entropy,
    trace_separatrix,
    volume,
)
from vge.spectral import build_truncation, entropy, eta, residue

LOG2 = math.log(2)


def l_origami():
    return Origami.from_cycles(3, [(1, 2)], [(1, 3)])


def _grid(a, b, step):
    n = int(round((b - a) / step)) + 1
    return np.array([float(format(a + i * step, ".12g")) for i in range(n)])


# -- 1 ------------------------------------------------------------------------

def test_criterion_01_closed_form_entropy():
    t = time.perf_counter()
    h1 = entropy(MetricGraph.loops(1, 1)).h
    t1 = time.perf_counter() - t
    t = time.perf_counter()
    res = entropy(arithmetic_tail(), k=8, K=40)
    t2 = time.perf_counter() - t
    err1, err2 = abs(h1 - LOG2), abs(res.h - LOG2)
    ok = err1 <= 1e-9 and err2 <= 1e-6 and t1 < 1 and t2 < 1
    record(1, ok, f"|h-log2|: loops {err1:.1e}, arithmetic tail {err2:.1e} at (k,K)=(8,40); "
                  f"times {t1:.2f}s, {t2:.2f}s")
    assert ok


# -- 2 ------------------------------------------------------------------------

def test_criterion_02_oracle_agreement():
    t = time.perf_counter()
    R = _grid(0.0, 20.0, 0.05)
    parts, ok = [], True
    for name, g in GRAPHS.items():
        h = entropy(g).h
        slope = growth_rate(count_paths(g, 0, R, cap=10**7), window=0.5).slope
        good = abs(h - slope) <= 0.02 * h
        ok &= good
        parts.append(f"{name} h={h:.4f} slope={slope:.4f}{'' if good else ' (off)'}")
    elapsed = time.perf_counter() - t
    ok &= elapsed < 60
    record(2, ok, "; ".join(parts) + f"; {elapsed:.1f}s")
    assert ok


# -- 3 ------------------------------------------------------------------------

def _remainder_bound(g, z, h, R):
    """Bound on the paths longer than R: sum e^{-z l} <= e^{-(z-s)R} eta(s) for h < s < z."""
    s = 0.5 * (h + z)
    ev = eta(g, 0, s, h=h)
    return math.exp(-(z - s) * R) * (ev.value + ev.series_tail_bound)


def test_criterion_03_eta_identity():
    worst, ok = 0.0, True
    for name, g in GRAPHS.items():
        h = entropy(g).h
        R = min(20.0, math.log(10**6) / max(h, 1e-3))
        for dz in (0.25, 0.5, 1.0):
            z = h + dz
            ev = eta(g, 0, z, h=h)
            partial = partial_eta(g, 0, z, R)
            bound = _remainder_bound(g, z, h, R) + ev.series_tail_bound
            gap = ev.value - partial
            good = -1e-8 <= gap <= bound + 1e-8
            ok &= good
            worst = max(worst, gap / max(bound, 1e-300))
    r = residue(MetricGraph.loops(1, 1), 0, LOG2).residue
    ok &= abs(r - 1.0) <= 1e-4
    record(3, ok, f"partial sums within certified bounds (largest used fraction {worst:.2f}); "
                  f"residue on loops {r:.8f}")
    assert ok


# -- 4 ------------------------------------------------------------------------

SMALL = list(GRAPHS.values()) + [
    MetricGraph.from_edges(2, [(0, 0, 1.0), (0, 1, 0.5), (1, 0, 2.0), (1, 1, 1.5)]),
    MetricGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (0, 2, 0.7), (2, 2, 1.3)]),
    MetricGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 0.4), (2, 0, 2.0), (1, 0, 1.1),
                               (2, 1, 0.9), (0, 0, 3.0)]),
]


def _word_sum(table, z, a, b, n):
    K = len(table)
    total = 0.0
    for mid in itertools.product(range(K), repeat=n - 1):
        word = (a,) + mid + (b,)
        if all(table[u].target == table[v].source for u, v in zip(word, word[1:])):
            total += math.exp(-z * sum(table[i].length for i in word))
    return math.exp(z * table[a].length) * total


def test_criterion_04_matrix_power_identity():
    worst, ok = 0.0, True
    for g in SMALL:
        K = g.edge_count
        assert K <= 6
        table = merged_edge_order(g, K)
        for z in (0.3, 1.0):
            M = build_truncation(g, z, K).entries
            P = np.eye(K)
            for n in range(1, 5):
                P = P @ M
                for a in range(K):
                    for b in range(K):
                        want = _word_sum(table, z, a, b, n)
                        err = abs(P[a, b] - want) / want if want else abs(P[a, b])
                        worst = max(worst, err)
    ok = worst <= 1e-10
    record(4, ok, f"{len(SMALL)} graphs, n <= 4, max relative error {worst:.1e}")
    assert ok


# -- 5 ------------------------------------------------------------------------

def test_criterion_05_convergence_vs_oscillation():
    t = time.perf_counter()
    g = MetricGraph.loops(1, math.sqrt(2))
    rep = analyze(count_paths(g, 0, _grid(4.0, 24.0, 0.05)), entropy(g).h)
    osc = analyze(count_paths(MetricGraph.loops(1, 1), 0, _grid(4.0, 24.0, 0.05)), LOG2)
    elapsed = time.perf_counter() - t
    ok = (rep.fluctuation < 0.05 and rep.verdict == CONVERGENT and osc.verdict == OSCILLATORY
          and elapsed < 60)
    record(5, ok, f"{{1,sqrt2}} fluctuation {rep.fluctuation:.4f} (< 0.05 required), verdict "
                  f"{rep.verdict}; {{1,1}} verdict {osc.verdict}; {elapsed:.1f}s")
    assert ok


# -- 6 ------------------------------------------------------------------------

LIBRARY = [
    Origami(1, [0], [0]),
    Origami.from_images([2, 1], [1, 2]),
    Origami.from_cycles(3, [(1, 2)], [(1, 3)]),
    Origami.from_images([2, 3, 1], [1, 3, 2]),
    Origami.from_images([2, 1, 4, 3], [3, 4, 2, 1]),
    Origami.from_images([2, 3, 4, 5, 1], [1, 3, 2, 5, 4]),
    Origami.from_images([6, 3, 4, 1, 2, 5], [3, 1, 6, 4, 2, 5]),
    Origami.from_images([2, 3, 4, 5, 6, 1], [2, 1, 4, 3, 6, 5]),
]


def test_criterion_06_origami_structure():
    t = time.perf_counter()
    o = l_origami()
    cones = cone_points(o)
    structure = len(cones) == 1 and cones[0].k == 2 and o.genus() == 2
    gb = []
    for s in LIBRARY:
        ks = [len(orb) // 4 - 1 for orb in s.vertex_orbits()]
        gb.append(sum(ks) == 2 * s.genus() - 2)
    sizes = sorted({s.n for s in LIBRARY})
    try:
        enumerate_saddles(Origami(1, [0], [0]), 2)
        torus_ok = False
    except NoSingularities:
        torus_ok = True
    elapsed = time.perf_counter() - t
    ok = structure and all(gb) and len(LIBRARY) >= 5 and torus_ok and elapsed < 1
    record(6, ok, f"L-origami cones={[c.k for c in cones]} genus={o.genus()}; Gauss-Bonnet "
                  f"{sum(gb)}/{len(gb)} (n in {sizes}); torus raises NoSingularities={torus_ok}; "
                  f"{elapsed:.2f}s")
    assert ok


# -- 7 ------------------------------------------------------------------------

def test_criterion_07_saddle_enumeration():
    o = l_origami()
    t = time.perf_counter()
    S = enumerate_saddles(o, 40)
    short = S.count_upto(1.0)
    ratios = [S.count_upto(L) / L ** 2 for L in (10, 20, 40)]
    spread = max(ratios) / min(ratios)
    bad = 0
    for s in S:
        r = S[s.reverse_id]
        if not (S[r.reverse_id] is s and r.holonomy == (-s.holonomy[0], -s.holonomy[1])
                and r.length == s.length and r.start.cone == s.end.cone
                and r.end.cone == s.start.cone):
            bad += 1
        again = trace_separatrix(o, s.start, s.length + 1e-9)
        if again is None or again.holonomy != s.holonomy or again.end != s.end or again.m != s.m:
            bad += 1
    elapsed = time.perf_counter() - t
    ok = short == 12 and spread <= 1.5 and bad == 0 and elapsed < 60
    record(7, ok, f"{short} saddles of length <= 1; N/L^2 = {', '.join(f'{r:.3f}' for r in ratios)} "
                  f"(spread {spread:.3f}); {len(S)} connections, {bad} invariant failures; "
                  f"{elapsed:.1f}s")
    assert ok


# -- 8 ------------------------------------------------------------------------

def test_criterion_08_volume_formula():
    o = l_origami()
    inner = [0.1, 0.25, 0.5, 0.75, 0.9, 0.999]
    outer = [1.1, 1.2, 1.3]
    V = volume(o, 0, inner + [1.0] + outer).volumes
    errs = [abs(V[i] - 3 * math.pi * R * R) for i, R in enumerate(inner)]
    errs += [abs(V[len(inner) + 1 + i] - (3 * math.pi * R * R + 24 * math.pi * (R - 1) ** 2))
             for i, R in enumerate(outer)]
    at_one = V[len(inner)]
    # both closed forms equal 3pi at R = 1
    cont = abs(at_one - 3 * math.pi)
    worst = max(errs)
    ok = worst <= 1e-12 and cont <= 1e-12
    record(8, ok, f"max error vs closed form {worst:.1e}; |V(1) - 3pi| = {cont:.1e}")
    assert ok


# -- 9 ------------------------------------------------------------------------

def _largest_feasible(o, h, start=6.0, step=0.25, cap=10**8, budget=90.0):
    """Grow the radius until the path enumeration hits the cap or the time budget."""
    best = None
    rmax = start
    t = time.perf_counter()
    while time.perf_counter() - t < budget:
        grid = _grid(1.0, rmax, 0.05)
        try:
            V = volume(o, 0, grid, cap=cap)
            N = count_arcs(o, 0, 0, grid, cap=cap)
        except ResourceLimitError:
            break
        best = (rmax, V, N)
        rmax += step
    return best


def test_criterion_09_surface_asymptotics():
    t = time.perf_counter()
    o = l_origami()
    ent = surface_entropy(o, L=8)
    (L1, _, h1), (L2, _, h2) = ent.ladder[-2:]
    h = ent.h
    rmax, V, N = _largest_feasible(o, h)
    rv, rn = analyze(V, h), analyze(N, h)
    t3 = hypothesis_check_surface(o, L=20).t3
    non_arith = t3 is not None and not t3.is_arithmetic
    elapsed = time.perf_counter() - t
    parts = {
        "ladder": abs(h2 - h1) <= 1e-2,
        "V": rv.fluctuation < 0.10 and rv.C_estimate > 0,
        "N_X": rn.fluctuation < 0.10 and rn.C_estimate > 0,
        "T3": non_arith,
        "time": elapsed < 300,
    }
    ok = all(parts.values())
    failed = [k for k, v in parts.items() if not v]
    record(9, ok, f"h={h:.9f} (L {L1:g}->{L2:g} gap {abs(h2 - h1):.1e}); R <= {rmax:g}; "
                  f"V fluct {rv.fluctuation:.3f} C={rv.C_estimate:.4f}; "
                  f"N_X fluct {rn.fluctuation:.3f} D={rn.C_estimate:.4f}; "
                  f"T3 non-arithmetic={non_arith}; {elapsed:.0f}s"
                  + (f"; failing: {', '.join(failed)}" if failed else ""))
    assert ok


# -- 10 -----------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path):
    files = {
        "loops": MetricGraph.loops(1, 1).to_dict(),
        "sqrt2": MetricGraph.loops(1, math.sqrt(2)).to_dict(),
        "arith": arithmetic_tail().to_dict(),
        "l3": l_origami().to_dict(),
    }
    for name, data in files.items():
        (tmp_path / f"{name}.json").write_text(json.dumps(data))
    p = {name: str(tmp_path / f"{name}.json") for name in files}
    commands = [
        ["graph", "entropy", p["loops"], "--tol", "1e-10"],
        ["graph", "entropy", p["arith"]],
        ["graph", "count", p["sqrt2"], "--rmax", "20"],
        ["graph", "eta", p["loops"], "--z", "1.0", "--z", "1.5", "--residue"],
        ["graph", "asym", p["sqrt2"], "--rmin", "4", "--rmax", "24"],
        ["graph", "check", p["sqrt2"]],
        ["origami", "info", p["l3"]],
        ["origami", "saddles", p["l3"], "--L", "40"],
        ["origami", "entropy", p["l3"]],
        ["origami", "volume", p["l3"], "--rmax", "5"],
        ["origami", "arcs", p["l3"], "--rmax", "5"],
        ["origami", "asym", p["l3"], "--rmin", "1", "--rmax", "6"],
        ["origami", "check", p["l3"]],
    ]
    mismatched = []
    for i, argv in enumerate(commands):
        outs = []
        for j, threads in enumerate((1, 1, 4)):
            target = tmp_path / f"out_{i}_{j}"
            code = run(argv + ["--threads", str(threads), "-o", str(target)])
            outs.append((code, target.read_bytes() if target.exists() else b""))
        if not (outs[0] == outs[1] == outs[2] and outs[0][0] == 0):
            mismatched.append(" ".join(argv[:2]))
    ok = not mismatched
    record(10, ok, f"{len(commands)} commands x (threads 1, 1, 4) byte-identical"
                   + (f"; mismatched: {mismatched}" if mismatched else ""))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
