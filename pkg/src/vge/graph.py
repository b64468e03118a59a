"""Weighted directed metric graphs with finitely or countably many edges.

A graph has a finite vertex set, a finite list of *head* edges and any
number of *tail families*.  A tail family is an infinite parametric run of
parallel edges ``source -> target`` whose n-th member (n = 1, 2, ...) has
length ``a + b*n`` (arithmetic) or ``a * n**alpha`` (power).  Every
operation that needs a finite object works on a prefix of the global edge
order returned by :func:`merged_edge_order`.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InputFormatError

ARITHMETIC = "arithmetic"
POWER = "power"


@dataclass(frozen=True)
class HeadEdge:
    id: int
    source: int
    target: int
    length: float

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise InputFormatError(f"edge {self.id}: length must be positive, got {self.length!r}")


@dataclass(frozen=True)
class TailFamily:
    """Infinite family of parallel edges with parametric lengths.

    For ``kind == "arithmetic"`` member n has length ``a + b*n``; for
    ``kind == "power"`` it has length ``a * n**b`` (``b`` is the exponent,
    also available as :attr:`alpha`).
    """

    source: int
    target: int
    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in (ARITHMETIC, POWER):
            raise InputFormatError(f"unknown tail kind {self.kind!r}")
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise InputFormatError("tail parameters must be finite")
        if not self.satisfies_h1():
            raise InputFormatError(f"tail family parameters violate the summability constraints: {self}")

    @property
    def alpha(self) -> float:
        return self.b

    def satisfies_h1(self) -> bool:
        if self.kind == ARITHMETIC:
            return self.a >= 0 and self.b > 0
        return self.a > 0 and self.b > 0

    def length(self, n: int) -> float:
        if self.kind == ARITHMETIC:
            return self.a + self.b * n
        return self.a * float(n) ** self.b

    def count_upto(self, R: float) -> int:
        """Number of members with length <= R."""
        if self.kind == ARITHMETIC:
            n = math.floor((R - self.a) / self.b) if R >= self.a else 0
        else:
            n = math.floor((R / self.a) ** (1.0 / self.b)) if R > 0 else 0
        n = max(n, 0)
        # floating guard on both sides of the boundary
        while n > 0 and self.length(n) > R:
            n -= 1
        while self.length(n + 1) <= R:
            n += 1
        return n


class Edge(NamedTuple):
    """Entry of the global edge order.

    ``family`` is -1 for head edges, in which case ``member`` is the head
    edge id; otherwise ``member`` is the 1-based index within the family.
    """

    index: int
    source: int
    target: int
    length: float
    family: int = -1
    member: int = 0


@dataclass(frozen=True)
class EdgeTable:
    """Prefix of the global edge order.

    ``truncated`` is set when fewer than the requested number of edges
    exist (fully finite graph).
    """

    edges: tuple
    truncated: bool = False

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __getitem__(self, i):
        return self.edges[i]

    @property
    def sources(self) -> np.ndarray:
        return np.array([e.source for e in self.edges], dtype=np.int64)

    @property
    def targets(self) -> np.ndarray:
        return np.array([e.target for e in self.edges], dtype=np.int64)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([e.length for e in self.edges], dtype=float)


@dataclass(frozen=True)
class PathRecord:
    edges: tuple
    total_length: float

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class MetricGraph:
    vertex_count: int
    head_edges: tuple = ()
    tail_families: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "head_edges", tuple(self.head_edges))
        object.__setattr__(self, "tail_families", tuple(self.tail_families))
        if self.vertex_count < 1:
            raise InputFormatError("graph needs at least one vertex")
        n = self.vertex_count
        for e in self.head_edges:
            if not (0 <= e.source < n and 0 <= e.target < n):
                raise InputFormatError(f"edge {e.id} has an endpoint outside [0, {n})")
        for f in self.tail_families:
            if not (0 <= f.source < n and 0 <= f.target < n):
                raise InputFormatError("tail family has an endpoint outside the vertex range")
        lengths = [e.length for e in self.head_edges]
        if any(x > y for x, y in zip(lengths, lengths[1:])):
            raise InputFormatError("head edge lengths must be nondecreasing")

    @classmethod
    def from_edges(cls, vertex_count, edges, tails=()):
        """Build from ``(source, target, length)`` triples, sorting by length."""
        ordered = sorted(enumerate(edges), key=lambda t: (t[1][2], t[0]))
        head = [HeadEdge(i, s, t, float(x)) for i, (_, (s, t, x)) in enumerate(ordered)]
        return cls(vertex_count, tuple(head), tuple(tails))

    @classmethod
    def loops(cls, *lengths):
        """Single vertex carrying one loop per given length."""
        return cls.from_edges(1, [(0, 0, x) for x in lengths])

    @property
    def is_finite(self) -> bool:
        return not self.tail_families

    @property
    def edge_count(self):
        """Total number of edges, or ``None`` for infinite graphs."""
        return len(self.head_edges) if self.is_finite else None

    def scaled(self, s: float) -> "MetricGraph":
        head = [HeadEdge(e.id, e.source, e.target, e.length * s) for e in self.head_edges]
        tails = []
        for f in self.tail_families:
            if f.kind == ARITHMETIC:
                tails.append(TailFamily(f.source, f.target, f.kind, f.a * s, f.b * s))
            else:
                tails.append(TailFamily(f.source, f.target, f.kind, f.a * s, f.b))
        return MetricGraph(self.vertex_count, head, tails)

    def to_dict(self) -> dict:
        tails = []
        for f in self.tail_families:
            d = {"from": f.source, "to": f.target, "kind": f.kind, "a": f.a}
            d["b" if f.kind == ARITHMETIC else "alpha"] = f.b
            tails.append(d)
        return {
            "vertices": self.vertex_count,
            "edges": [{"from": e.source, "to": e.target, "len": e.length} for e in self.head_edges],
            "tails": tails,
        }


def _family_stream(fi: int, f: TailFamily):
    for n in itertools.count(1):
        yield f.length(n), 1, fi, n, f.source, f.target


def _edge_stream(graph: MetricGraph) -> Iterator[Edge]:
    """Yield every edge in global order (possibly forever)."""
    streams = [
        ((e.length, 0, e.id, 0, e.source, e.target) for e in graph.head_edges)
    ]
    for fi, f in enumerate(graph.tail_families):
        streams.append(_family_stream(fi, f))
    for index, (length, is_tail, key, n, s, t) in enumerate(heapq.merge(*streams)):
        if is_tail:
            yield Edge(index, s, t, length, key, n)
        else:
            yield Edge(index, s, t, length, -1, key)


@lru_cache(maxsize=128)
def merged_edge_order(graph: MetricGraph, K: int) -> EdgeTable:
    """The ``K`` shortest edges of ``graph`` in the global order.

    Ties are broken head-before-tail, then by head id or by
    (family index, member index).
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    edges = tuple(itertools.islice(_edge_stream(graph), K))
    return EdgeTable(edges, truncated=len(edges) < K)


def edges_within(graph: MetricGraph, R: float) -> EdgeTable:
    """All edges of length <= R (a finite prefix of the global order)."""
    n = sum(1 for e in graph.head_edges if e.length <= R)
    n += sum(f.count_upto(R) for f in graph.tail_families)
    table = merged_edge_order(graph, n)
    assert all(e.length <= R for e in table)
    return table


def edge_count_within(graph: MetricGraph, R: float) -> int:
    return sum(1 for e in graph.head_edges if e.length <= R) + sum(
        f.count_upto(R) for f in graph.tail_families
    )


def strongly_connected(n_nodes: int, rows, cols) -> bool:
    """Whether the directed graph with arcs ``rows[i] -> cols[i]`` is strongly connected."""
    if n_nodes == 0:
        return False
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    adj = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n_nodes, n_nodes))
    ncomp, _ = connected_components(adj.tocsr(), directed=True, connection="strong")
    return ncomp == 1


def edge_graph_strongly_connected(table: EdgeTable, vertex_count: int) -> bool:
    """Strong connectivity of the relation ``a -> b iff t(a) = i(b)`` on ``table``.

    Uses an auxiliary graph with one node per edge and per vertex, arcs
    ``e -> t(e)`` and ``v -> e`` for ``i(e) = v``; edge nodes lie in one
    strong component exactly when the edge relation is strongly connected.
    """
    K = len(table)
    if K == 0:
        return False
    src, tgt = table.sources, table.targets
    idx = np.arange(K)
    rows = np.concatenate([idx, K + src])
    cols = np.concatenate([K + tgt, idx])
    adj = coo_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(K + vertex_count, K + vertex_count)
    )
    _, labels = connected_components(adj.tocsr(), directed=True, connection="strong")
    return bool(np.all(labels[:K] == labels[0]))


@dataclass(frozen=True)
class HypothesisReport:
    h1_ok: bool
    h2_ok: bool
    h3: object = field(default=None)
    K: int = 0
    L: float = 0.0


def check_hypotheses(graph: MetricGraph, K: int = 64, L: float = 6.0, tol=None) -> HypothesisReport:
    """Report on summability, edge mutual reachability and non-arithmeticity.

    Reachability is tested on the ``K`` shortest edges; arithmeticity on
    the lengths of closed paths of length at most ``L``.
    """
    from .counting import check_arithmetic, closed_path_lengths

    h1 = all(f.satisfies_h1() for f in graph.tail_families)
    table = merged_edge_order(graph, K)
    h2 = edge_graph_strongly_connected(table, graph.vertex_count)
    lengths = closed_path_lengths(graph, L)
    h3 = check_arithmetic(lengths, tol) if lengths else None
    return HypothesisReport(h1, h2, h3, len(table), L)


# -- JSON input -----------------------------------------------------------

def _positive(value, what):
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise InputFormatError(f"{what}: not a number: {value!r}") from None
    if not math.isfinite(x):
        raise InputFormatError(f"{what}: not finite")
    return x


def graph_from_dict(data: dict) -> MetricGraph:
    try:
        n = int(data["vertices"])
        raw_edges = data.get("edges", [])
        raw_tails = data.get("tails", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed graph description: {exc}") from None
    edges = []
    for i, e in enumerate(raw_edges):
        try:
            s, t = int(e["from"]), int(e["to"])
        except (KeyError, TypeError, ValueError):
            raise InputFormatError(f"edge {i}: needs integer 'from' and 'to'") from None
        x = _positive(e.get("len"), f"edge {i}")
        if x <= 0:
            raise InputFormatError(f"edge {i}: nonpositive length {x}")
        edges.append((s, t, x))
    tails = []
    for i, f in enumerate(raw_tails):
        try:
            s, t, kind = int(f["from"]), int(f["to"]), f["kind"]
        except (KeyError, TypeError, ValueError):
            raise InputFormatError(f"tail {i}: needs 'from', 'to' and 'kind'") from None
        a = _positive(f.get("a"), f"tail {i} a")
        if kind == ARITHMETIC:
            b = _positive(f.get("b"), f"tail {i} b")
        elif kind == POWER:
            b = _positive(f.get("alpha"), f"tail {i} alpha")
        else:
            raise InputFormatError(f"tail {i}: unknown kind {kind!r}")
        tails.append(TailFamily(s, t, kind, a, b))
    return MetricGraph.from_edges(n, edges, tails)


def load_graph(path) -> MetricGraph:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON: {exc}") from None
    return graph_from_dict(data)


def path_length(graph_edges: Sequence[Edge], ids: Sequence[int]) -> float:
    total = 0.0
    for i in ids:
        total += graph_edges[i].length
    return total
