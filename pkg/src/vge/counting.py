"""Brute-force path oracles: enumeration, counting, closed-path lengths.

Everything here works directly from the edge list.  It is deliberately
independent of the transfer-matrix machinery in :mod:`vge.spectral` so the
two can be checked against each other.
"""
from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels
from .errors import ResourceLimitError
from .graph import MetricGraph, PathRecord, edges_within, merged_edge_order

DEFAULT_CAP = 10**8


@dataclass(frozen=True)
class CountCurve:
    radii: np.ndarray
    counts: np.ndarray
    start_vertex: int = 0

    def __post_init__(self):
        object.__setattr__(self, "radii", np.asarray(self.radii, dtype=float))
        object.__setattr__(self, "counts", np.asarray(self.counts))

    @property
    def values(self) -> np.ndarray:
        return self.counts

    def to_csv(self, header=("R", "count")) -> str:
        return curve_csv(self.radii, self.counts, header)


@dataclass(frozen=True)
class ArithmeticityReport:
    is_arithmetic: bool
    d: float | None
    max_residual: float
    witnesses: tuple = ()
    tol: float = 0.0
    inconclusive: bool = False


@dataclass(frozen=True)
class GrowthEstimate:
    slope: float
    stderr: float
    n_points: int
    degenerate: bool = False


def fmt(x) -> str:
    """Fixed 12-significant-digit formatting used by every exported table."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def curve_csv(radii, values, header=("R", "value")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r, v in zip(radii, values):
        w.writerow([fmt(r), fmt(v)])
    return buf.getvalue()


def _edge_table(graph: MetricGraph, R: float, K: int | None):
    table = edges_within(graph, R)
    if K is not None:
        if K < len(table):
            raise ValueError(
                f"edge cutoff K={K} excludes edges of length <= {R}; need K >= {len(table)}"
            )
        table = merged_edge_order(graph, K)
    return table


def enumerate_paths(graph: MetricGraph, x: int, R: float, K: int | None = None,
                    cap: int = DEFAULT_CAP) -> Iterator[PathRecord]:
    """Yield every nonempty path from ``x`` of length <= R.

    Paths come out sorted by (total length, edge ids).  Expansion is
    uniform-cost: the shortest unexpanded path is always emitted next, so
    stopping at R is exact.
    """
    if R <= 0:
        return
    table = _edge_table(graph, R, K)
    out = [[] for _ in range(graph.vertex_count)]
    for e in table:
        out[e.source].append(e)
    heap = [(e.length, (e.index,)) for e in out[x] if e.length <= R]
    heapq.heapify(heap)
    while heap:
        length, ids = heapq.heappop(heap)
        yield PathRecord(ids, length)
        last = table[ids[-1]]
        for e in out[last.target]:
            nl = length + e.length
            if nl <= R:
                heapq.heappush(heap, (nl, ids + (e.index,)))
        if len(heap) > cap:
            raise ResourceLimitError(cap)


def _transfer(graph: MetricGraph, table):
    """CSR successor lists over vertices, each row sorted by edge length."""
    n = graph.vertex_count
    order = sorted(table, key=lambda e: (e.source, e.length, e.index))
    indptr = np.zeros(n + 1, dtype=np.int64)
    for e in order:
        indptr[e.source + 1] += 1
    indptr = np.cumsum(indptr)
    succ = np.array([e.target for e in order], dtype=np.int64)
    succ_len = np.array([e.length for e in order], dtype=float)
    return indptr, succ, succ_len


def _accumulate(graph: MetricGraph, x: int, grid, K=None, z=math.nan, cap=DEFAULT_CAP, weight=None):
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty radius grid")
    table = _edge_table(graph, max(grid[-1], 0.0), K)
    indptr, succ, succ_len = _transfer(graph, table)
    lo, hi = indptr[x], indptr[x + 1]
    if weight is None:
        weight = np.ones(graph.vertex_count)
    return kernels.accumulate_paths(
        indptr, succ, succ_len, succ[lo:hi], succ_len[lo:hi], weight, grid, z=z, cap=cap
    )


def count_paths(graph: MetricGraph, x: int, R_grid: Sequence[float], K: int | None = None,
                cap: int = DEFAULT_CAP) -> CountCurve:
    """Exact number of nonempty paths from ``x`` with length <= R, per grid radius."""
    grid = np.asarray(R_grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("R_grid must be strictly increasing")
    acc = _accumulate(graph, x, grid, K=K, cap=cap)
    return CountCurve(grid, acc["counts"], x)


def partial_eta(graph: MetricGraph, x: int, z: float, R: float, cap: int = DEFAULT_CAP) -> float:
    """Sum of exp(-z * len(p)) over nonempty paths from ``x`` with len(p) <= R."""
    acc = _accumulate(graph, x, [R], z=z, cap=cap)
    return float(acc["wexp"][-1])


def closed_path_lengths(graph: MetricGraph, L: float, K: int | None = None,
                        cap: int = DEFAULT_CAP) -> list:
    """Lengths (with multiplicity) of closed paths of length <= L, over all start vertices."""
    if L <= 0:
        raise ValueError("L must be positive")
    table = _edge_table(graph, L, K)
    out = [[] for _ in range(graph.vertex_count)]
    for e in table:
        out[e.source].append(e)
    lengths = []
    nodes = 0
    for x in range(graph.vertex_count):
        stack = [(e.target, e.length) for e in reversed(out[x]) if e.length <= L]
        while stack:
            v, length = stack.pop()
            nodes += 1
            if nodes > cap:
                raise ResourceLimitError(cap)
            if v == x:
                lengths.append(length)
            for e in reversed(out[v]):
                nl = length + e.length
                if nl <= L:
                    stack.append((e.target, nl))
    lengths.sort()
    return lengths


def _approx_gcd(a: float, b: float, tol: float) -> float:
    a, b = max(a, b), min(a, b)
    while b > tol:
        r = abs(math.remainder(a, b))
        if r <= tol:
            return b
        a, b = b, r
    return b


def check_arithmetic(lengths: Sequence[float], tol: float | None = None) -> ArithmeticityReport:
    """Decide whether all ``lengths`` lie (to ``tol``) in d*N for some d > tol.

    The candidate d comes from a tolerance-aware Euclidean reduction over
    the sorted lengths, refined by least squares.  When d lands within three
    orders of magnitude of ``tol`` the verdict is reported as inconclusive.
    """
    xs = sorted(float(v) for v in lengths)
    if not xs:
        raise ValueError("check_arithmetic needs at least one length")
    if tol is None:
        tol = 1e-9 * xs[-1]
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = xs[0]
    breaker = None
    for v in xs[1:]:
        if d <= tol:
            break
        d_new = _approx_gcd(d, v, tol)
        if breaker is None and d_new < 1e3 * tol <= d:
            breaker = (xs[0], v)
        d = d_new
    if d > tol:
        mult = np.rint(np.asarray(xs) / d)
        d = float(np.dot(mult, xs) / np.dot(mult, mult))
        res = np.abs(np.asarray(xs) - d * np.rint(np.asarray(xs) / d))
    else:
        res = np.abs(np.asarray(xs) - d * np.rint(np.asarray(xs) / d)) if d > 0 else np.asarray(xs)
    max_res = float(res.max())
    arithmetic = max_res <= tol and d > tol
    inconclusive = arithmetic and d < 1e3 * tol
    # witnesses: the first pair that forced d down, then the worst-fitting lengths
    worst = np.argsort(-res, kind="stable")[:3]
    witnesses = tuple((xs[0], xs[int(i)]) for i in worst)
    if breaker is not None:
        witnesses = (breaker,) + witnesses[:2]
    return ArithmeticityReport(
        is_arithmetic=arithmetic and not inconclusive,
        d=d if arithmetic else None,
        max_residual=max_res,
        witnesses=witnesses,
        tol=tol,
        inconclusive=inconclusive,
    )


def growth_rate(curve, window: float = 0.5, min_points: int = 5) -> GrowthEstimate:
    """Least-squares slope of log(count) against R over the top ``window`` of the R range."""
    R = np.asarray(curve.radii, dtype=float)
    y = np.asarray(curve.values, dtype=float)
    cut = R[-1] - window * (R[-1] - R[0])
    mask = (R >= cut) & (y > 0)
    n = int(mask.sum())
    if n < min_points:
        raise ValueError(f"growth_rate needs {min_points} positive points in the window, got {n}")
    xr, ly = R[mask], np.log(y[mask])
    xc = xr - xr.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, ly - ly.mean()) / sxx)
    resid = ly - ly.mean() - slope * xc
    stderr = math.sqrt(float(np.dot(resid, resid)) / max(n - 2, 1) / sxx)
    degenerate = bool(np.ptp(ly) == 0)
    return GrowthEstimate(slope, stderr, n, degenerate)
