"""Square-tiled translation surfaces (origamis).

An origami with ``n`` unit squares is given by two permutations of
``range(n)``: ``sigma_h[s]`` is the square to the right of ``s`` and
``sigma_v[s]`` the square above it.  Corners are typed ``BL, BR, TR, TL``
(0..3).  Walking counterclockwise around a vertex, the corner sectors come
in the order

    (s, BL) -> (h^-1 s, BR) -> (v^-1 s, TR) -> (h s, TL) -> (v s, BL)

so a vertex with ``4(k+1)`` corners is a cone point of angle ``2 pi (k+1)``.
Each orbit is listed starting from a BL corner, which makes the corner at
position ``j`` have type ``j % 4`` and lets a direction at a cone point be
coordinatized by ``Theta = j * pi/2 + offset`` with ``offset`` in
``[0, pi/2)``.

Directions used for tracing are rational: the offset is stored as a
primitive first-quadrant vector ``(a, b)`` with ``a > 0, b >= 0``; the
plane direction is ``(a, b)`` rotated by ``j % 4`` quarter turns.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import kernels
from .counting import ArithmeticityReport, CountCurve, check_arithmetic, curve_csv
from .errors import (
    DisconnectedTruncation,
    InputFormatError,
    NoSingularities,
    ResourceLimitError,
)
from .graph import strongly_connected
from .spectral import BISECT_TOL, PERRON_TOL, EntropyResult, _power, _RhoOracle, solve_root

BL, BR, TR, TL = range(4)
CORNER_NAMES = ("BL", "BR", "TR", "TL")
ANGLE_TOL = 1e-12
DEFAULT_CAP = 10**8


def _check_perm(images, n, what):
    if sorted(images) != list(range(n)):
        raise InputFormatError(f"{what} is not a permutation of {n} squares")


@dataclass(frozen=True)
class Origami:
    n: int
    sigma_h: tuple
    sigma_v: tuple

    def __post_init__(self):
        object.__setattr__(self, "sigma_h", tuple(int(x) for x in self.sigma_h))
        object.__setattr__(self, "sigma_v", tuple(int(x) for x in self.sigma_v))
        if self.n < 1:
            raise InputFormatError("an origami needs at least one square")
        if len(self.sigma_h) != self.n or len(self.sigma_v) != self.n:
            raise InputFormatError("permutation lengths must equal n")
        _check_perm(self.sigma_h, self.n, "sigma_h")
        _check_perm(self.sigma_v, self.n, "sigma_v")
        seen = {0}
        todo = [0]
        while todo:
            s = todo.pop()
            for t in (self.sigma_h[s], self.sigma_v[s], self.h_inv[s], self.v_inv[s]):
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        if len(seen) != self.n:
            raise InputFormatError("origami is not connected (permutations act intransitively)")

    @classmethod
    def from_images(cls, sigma_h: Sequence[int], sigma_v: Sequence[int]) -> "Origami":
        """From one-indexed image lists (position i holds sigma(i))."""
        return cls(len(sigma_h), [x - 1 for x in sigma_h], [x - 1 for x in sigma_v])

    @classmethod
    def from_cycles(cls, n: int, h_cycles=(), v_cycles=()) -> "Origami":
        """From one-indexed cycle notation, e.g. ``from_cycles(3, [(1, 2)], [(1, 3)])``."""

        def perm(cycles):
            img = list(range(n))
            for c in cycles:
                for i, x in enumerate(c):
                    img[x - 1] = c[(i + 1) % len(c)] - 1
            return img

        return cls(n, perm(h_cycles), perm(v_cycles))

    @cached_property
    def h_inv(self) -> tuple:
        inv = [0] * self.n
        for s, t in enumerate(self.sigma_h):
            inv[t] = s
        return tuple(inv)

    @cached_property
    def v_inv(self) -> tuple:
        inv = [0] * self.n
        for s, t in enumerate(self.sigma_v):
            inv[t] = s
        return tuple(inv)

    def successor(self, square: int, corner: int):
        """Next corner counterclockwise around the shared vertex."""
        if corner == BL:
            return self.h_inv[square], BR
        if corner == BR:
            return self.v_inv[square], TR
        if corner == TR:
            return self.sigma_h[square], TL
        return self.sigma_v[square], BL

    def commutator(self) -> tuple:
        """The square map v h v^-1 h^-1, i.e. four successor steps from a BL corner."""
        return tuple(self.sigma_v[self.sigma_h[self.v_inv[self.h_inv[s]]]] for s in range(self.n))

    def to_dict(self) -> dict:
        return {"n": self.n, "sigma_h": [x + 1 for x in self.sigma_h],
                "sigma_v": [x + 1 for x in self.sigma_v]}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def vertex_orbits(self) -> list:
        """All corner orbits, each starting at its smallest BL corner."""
        seen = set()
        orbits = []
        for s in range(self.n):
            if (s, BL) in seen:
                continue
            orbit = []
            c = (s, BL)
            while c not in seen:
                seen.add(c)
                orbit.append(c)
                c = self.successor(*c)
            orbits.append(tuple(orbit))
        return orbits

    def genus(self) -> int:
        # Euler characteristic V - E + F with E = 2n, F = n
        chi = len(self.vertex_orbits()) - self.n
        return (2 - chi) // 2


def origami_from_dict(data: dict) -> Origami:
    try:
        n = int(data["n"])
        h = [int(x) for x in data["sigma_h"]]
        v = [int(x) for x in data["sigma_v"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"malformed origami description: {exc}") from None
    if len(h) != n or len(v) != n:
        raise InputFormatError("sigma_h and sigma_v must have n entries")
    return Origami.from_images(h, v)


def load_origami(path) -> Origami:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: invalid JSON: {exc}") from None
    return origami_from_dict(data)


@dataclass(frozen=True)
class ConePoint:
    id: int
    corners: tuple
    k: int

    @property
    def angle(self) -> float:
        return 2.0 * math.pi * (self.k + 1)

    @property
    def sectors(self) -> int:
        return len(self.corners)


class Surface:
    """Vertex bookkeeping for one origami (cached per origami and marked flag)."""

    def __init__(self, origami: Origami, marked: bool = False):
        self.origami = origami
        self.marked = marked
        n = origami.n
        self.orbits = origami.vertex_orbits()
        self.corner_vertex = np.zeros(4 * n, dtype=np.int64)
        self.corner_pos = np.zeros(4 * n, dtype=np.int64)
        for vid, orbit in enumerate(self.orbits):
            for j, (s, c) in enumerate(orbit):
                self.corner_vertex[4 * s + c] = vid
                self.corner_pos[4 * s + c] = j
        self.cones = []
        self.vertex_cone = np.full(len(self.orbits), -1, dtype=np.int64)
        for vid, orbit in enumerate(self.orbits):
            k = len(orbit) // 4 - 1
            if k > 0 or marked:
                self.vertex_cone[vid] = len(self.cones)
                self.cones.append(ConePoint(len(self.cones), orbit, k))
        self.stop = (self.vertex_cone >= 0).astype(np.uint8)
        self.perms = tuple(
            np.asarray(p, dtype=np.int64)
            for p in (origami.sigma_h, origami.h_inv, origami.sigma_v, origami.v_inv)
        )

    def cone_k(self) -> np.ndarray:
        return np.array([c.k for c in self.cones], dtype=np.int64)

    def require_singular(self):
        if not self.cones:
            raise NoSingularities("origami has no cone points (angle 2*pi everywhere)")


@lru_cache(maxsize=64)
def surface(origami: Origami, marked: bool = False) -> Surface:
    return Surface(origami, marked)


def cone_points(origami: Origami, marked: bool = False) -> list:
    """Cone points: corner orbits of length 4(k+1) with k > 0 (k >= 0 when ``marked``)."""
    surf = surface(origami, marked)
    surf.require_singular()
    return list(surf.cones)


# -- directions --------------------------------------------------------------

def rotate(a: int, b: int, quarter_turns: int):
    t = quarter_turns % 4
    if t == 0:
        return a, b
    if t == 1:
        return -b, a
    if t == 2:
        return -a, -b
    return b, -a


def first_quadrant(p: int, q: int):
    """Split a nonzero plane vector into (quarter turns, (a, b)) with a > 0, b >= 0."""
    if p == 0 and q == 0:
        raise ValueError("zero direction")
    for t in range(4):
        a, b = rotate(p, q, -t)
        if a > 0 and b >= 0:
            return t, (a, b)
    raise AssertionError("unreachable")


@dataclass(frozen=True, order=True)
class DirectionAtCone:
    cone: int
    corner_index: int
    a: int = 1
    b: int = 0

    @property
    def offset(self) -> float:
        return math.atan2(self.b, self.a)

    @property
    def theta(self) -> float:
        return self.corner_index * (math.pi / 2) + self.offset

    @property
    def plane(self):
        return rotate(self.a, self.b, self.corner_index)

    @classmethod
    def from_plane(cls, cone: ConePoint, corner_index: int, p: int, q: int) -> "DirectionAtCone":
        t, (a, b) = first_quadrant(p, q)
        if t != corner_index % 4:
            raise ValueError(f"direction ({p}, {q}) does not point into sector {corner_index}")
        return cls(cone.id, corner_index, a, b)


def angle_between(d1: DirectionAtCone, d2: DirectionAtCone, total_angle: float) -> float:
    """Smaller of the two angles between directions at the same cone point."""
    if d1.cone != d2.cone:
        raise ValueError("directions belong to different cone points")
    delta = abs((d1.corner_index - d2.corner_index) * (math.pi / 2) + (d1.offset - d2.offset))
    delta = math.fmod(delta, total_angle)
    return min(delta, total_angle - delta)


@dataclass(frozen=True)
class SaddleConnection:
    id: int
    start: DirectionAtCone
    end: DirectionAtCone
    holonomy: tuple
    length: float
    reverse_id: int
    m: int = 1

    @property
    def direction(self):
        """Primitive plane direction (p, q)."""
        return self.start.plane

    @property
    def squared_length(self) -> int:
        return self.holonomy[0] ** 2 + self.holonomy[1] ** 2


@dataclass(frozen=True)
class SCPath:
    saddles: tuple
    total_length: float


def _max_multiple(n2: int, max_len: float) -> int:
    m = int(max_len / math.sqrt(n2))
    while m > 0 and m * m * n2 > max_len * max_len:
        m -= 1
    while (m + 1) ** 2 * n2 <= max_len * max_len:
        m += 1
    return m


def _trace(surf: Surface, start: DirectionAtCone, max_len: float, impl=None):
    cone = surf.cones[start.cone]
    square, ctype = cone.corners[start.corner_index]
    n2 = start.a * start.a + start.b * start.b
    steps = _max_multiple(n2, max_len)
    if steps == 0:
        return None
    hp, hi, vp, vi = surf.perms
    m, es, et = kernels.trace_ray(
        hp, hi, vp, vi, surf.corner_vertex, surf.stop, square, ctype, start.a, start.b, steps,
        impl=impl,
    )
    if m == 0:
        return None
    end_cone = int(surf.vertex_cone[surf.corner_vertex[4 * es + et]])
    end = DirectionAtCone(end_cone, int(surf.corner_pos[4 * es + et]), start.a, start.b)
    p, q = start.plane
    return int(m), end, (int(m) * p, int(m) * q)


def trace_separatrix(origami: Origami, start: DirectionAtCone, max_len: float,
                     marked: bool = False, impl=None):
    """Follow the ray leaving ``start`` until the first cone point within ``max_len``.

    Returns a :class:`SaddleConnection` (with ``id`` and ``reverse_id`` set
    to -1) or ``None``.
    """
    if math.gcd(start.a, start.b) != 1 or start.a <= 0 or start.b < 0:
        raise ValueError(f"offset vector ({start.a}, {start.b}) is not a primitive first-quadrant vector")
    if max_len <= 0:
        raise ValueError("max_len must be positive")
    surf = surface(origami, marked)
    surf.require_singular()
    res = _trace(surf, start, max_len, impl)
    if res is None:
        return None
    m, end, hol = res
    return SaddleConnection(-1, start, end, hol, m * math.sqrt(start.a ** 2 + start.b ** 2), -1, m)


def primitive_vectors(L: float):
    """First-quadrant primitive vectors (a > 0, b >= 0) of length <= L."""
    out = []
    L2 = L * L
    for a in range(1, int(L) + 1):
        for b in range(0, int(L) + 1):
            if a * a + b * b > L2:
                break
            if math.gcd(a, b) == 1:
                out.append((a, b))
    return out


class SaddleSet:
    """Oriented saddle connections of length <= L, sorted by length."""

    def __init__(self, origami: Origami, L: float, saddles: tuple, marked: bool = False):
        self.origami = origami
        self.L = L
        self.marked = marked
        self.saddles = saddles
        self.surface = surface(origami, marked)
        self.lengths = np.array([s.length for s in saddles], dtype=float)
        self.start_cone = np.array([s.start.cone for s in saddles], dtype=np.int64)
        self.end_cone = np.array([s.end.cone for s in saddles], dtype=np.int64)
        self.theta_start = np.array([s.start.theta for s in saddles], dtype=float)
        self.theta_end = np.array([s.end.theta for s in saddles], dtype=float)

    def __len__(self):
        return len(self.saddles)

    def __iter__(self):
        return iter(self.saddles)

    def __getitem__(self, i):
        return self.saddles[i]

    def count_upto(self, ell: float) -> int:
        return int(np.searchsorted(self.lengths, ell, side="right"))

    def restrict(self, ell: float) -> "SaddleSet":
        n = self.count_upto(ell)
        if n == len(self):
            return self
        return SaddleSet(self.origami, ell, self.saddles[:n], self.marked)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start_cone", "start_corner", "start_offset_num", "start_offset_den_code",
                     "p", "q", "m", "end_cone", "end_corner", "length"])
        for s in self.saddles:
            p, q = s.direction
            w.writerow([s.start.cone, s.start.corner_index, s.start.b, s.start.a, p, q, s.m,
                        s.end.cone, s.end.corner_index, format(s.length, ".12g")])
        return buf.getvalue()


def _assemble(origami, L, raw, marked) -> SaddleSet:
    def key(item):
        start, m, end, hol = item
        return (hol[0] ** 2 + hol[1] ** 2, start.cone, start.corner_index,
                Fraction(start.b, start.a))

    raw = sorted(raw, key=key)
    index = {(r[0].cone, r[0].corner_index, r[0].a, r[0].b): i for i, r in enumerate(raw)}
    saddles = []
    for i, (start, m, end, hol) in enumerate(raw):
        rev = index.get((end.cone, end.corner_index, end.a, end.b), -1)
        length = m * math.sqrt(start.a ** 2 + start.b ** 2)
        saddles.append(SaddleConnection(i, start, end, hol, length, rev, m))
    if any(s.reverse_id < 0 for s in saddles):
        raise AssertionError("saddle set is not closed under reversal")
    return SaddleSet(origami, L, tuple(saddles), marked)


@lru_cache(maxsize=32)
def _enumerate_cached(origami: Origami, L: float, marked: bool, threads: int) -> SaddleSet:
    surf = surface(origami, marked)
    surf.require_singular()
    vecs = primitive_vectors(L)
    sectors = [(c.id, j) for c in surf.cones for j in range(len(c.corners))]

    def work(sector):
        cone, j = sector
        found = []
        for a, b in vecs:
            d = DirectionAtCone(cone, j, a, b)
            res = _trace(surf, d, L)
            if res is not None:
                m, end, hol = res
                found.append((d, m, end, hol))
        return found

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, sectors))
    else:
        parts = [work(s) for s in sectors]
    raw = [item for part in parts for item in part]
    return _assemble(origami, L, raw, marked)


def enumerate_saddles(origami: Origami, L: float, marked: bool = False, threads: int = 1) -> SaddleSet:
    """Every oriented saddle connection of length <= L, each once, sorted by length.

    Ids are positions in the sorted order (length, start cone, start sector,
    offset slope) and do not depend on ``threads``.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    return _enumerate_cached(origami, float(L), bool(marked), max(1, int(threads)))


# -- concatenation ----------------------------------------------------------

def can_concatenate(s: SaddleConnection, t: SaddleConnection, origami: Origami | None = None,
                    marked: bool = False, total_angle: float | None = None) -> bool:
    """Whether ``s`` followed by ``t`` is locally geodesic (angle >= pi at the junction)."""
    if s.end.cone != t.start.cone:
        return False
    if total_angle is None:
        if origami is None:
            raise ValueError("need the origami or the cone angle")
        total_angle = surface(origami, marked).cones[t.start.cone].angle
    return angle_between(s.end, t.start, total_angle) >= math.pi - ANGLE_TOL


@dataclass(frozen=True)
class M0Report:
    matrix: np.ndarray
    strongly_connected: bool
    advice: str = ""


def _cone_angles(saddles: SaddleSet) -> np.ndarray:
    return np.array([c.angle for c in saddles.surface.cones], dtype=float)


def build_M0(saddles: SaddleSet) -> M0Report:
    """Boolean successor relation on saddle connections plus a strong-connectivity check."""
    if len(saddles) == 0:
        raise ValueError("empty saddle set")
    total = _cone_angles(saddles)[saddles.end_cone]
    same = saddles.end_cone[:, None] == saddles.start_cone[None, :]
    delta = np.abs(saddles.theta_end[:, None] - saddles.theta_start[None, :])
    delta = np.fmod(delta, total[:, None])
    ang = np.minimum(delta, total[:, None] - delta)
    M0 = same & (ang >= math.pi - ANGLE_TOL)
    rows, cols = np.nonzero(M0)
    # a lone saddle is irreducible only if it can follow itself
    ok = strongly_connected(len(saddles), rows, cols) and (len(saddles) > 1 or bool(M0[0, 0]))
    advice = "" if ok else f"truncation at L={saddles.L:g} is not strongly connected; raise L"
    return M0Report(M0, ok, advice)


@lru_cache(maxsize=16)
def _m0_cached(origami: Origami, L: float, marked: bool) -> M0Report:
    return build_M0(enumerate_saddles(origami, L, marked))


# -- entropy ------------------------------------------------------------------

class _ColumnScaled:
    """The operator ``M0 @ diag(scale)`` without forming it."""

    def __init__(self, M0: np.ndarray, scale: np.ndarray):
        self.M0 = M0
        self.scale = scale
        self.shape = M0.shape

    def __matmul__(self, v):
        return self.M0 @ (self.scale * v)

    def sum(self, axis=None):
        if axis != 1:
            raise NotImplementedError
        return self.M0 @ self.scale


@lru_cache(maxsize=4)
def _m0_float(origami: Origami, L: float, marked: bool) -> np.ndarray:
    return _m0_cached(origami, L, marked).matrix.astype(float)


def _entropy_at_L(origami, L, marked, tol, perron_tol):
    saddles = enumerate_saddles(origami, L, marked)
    rep = _m0_cached(origami, float(L), marked)
    if not rep.strongly_connected:
        raise DisconnectedTruncation(rep.advice)
    M0 = _m0_float(origami, float(L), marked)
    lengths = saddles.lengths

    def build(sigma):
        return _ColumnScaled(M0, np.exp(-sigma * lengths))

    oracle = _RhoOracle(build, perron_tol)
    h, bracket, sub = solve_root(oracle, tol)
    lo, hi, _, _ = _power(build(h), perron_tol, 200000, oracle.v)
    return h, bracket, abs(0.5 * (lo + hi) - 1.0), len(saddles)


def surface_entropy(origami: Origami, L: float = 8.0, tol: float = BISECT_TOL,
                    tol_ladder: float = 1e-2, ladder: bool = True, max_L: float = 64.0,
                    marked: bool = False, perron_tol: float = PERRON_TOL) -> EntropyResult:
    """Entropy of the saddle-connection transfer matrix, refined by doubling L.

    The ladder records ``(L, number of saddle connections, h_L)``; it stops
    once two successive values differ by less than ``tol_ladder``.
    """
    surface(origami, marked).require_singular()
    h, bracket, res, count = _entropy_at_L(origami, L, marked, tol, perron_tol)
    rungs = [(float(L), count, h)]
    while ladder:
        L2 = 2 * L
        if L2 > max_L:
            break
        h2, bracket2, res2, count2 = _entropy_at_L(origami, L2, marked, tol, perron_tol)
        rungs.append((float(L2), count2, h2))
        done = abs(h2 - h) < tol_ladder
        L, h, bracket, res = L2, h2, bracket2, res2
        if done:
            break
    return EntropyResult(h, tuple(bracket), res, rungs, False)


# -- path sums ----------------------------------------------------------------

def _successor_csr(saddles: SaddleSet):
    M0 = _m0_cached(saddles.origami, float(saddles.L), saddles.marked).matrix
    # saddles are sorted by length, so column order is already length order
    rows, cols = np.nonzero(M0)
    indptr = np.zeros(len(saddles) + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    return indptr, cols.astype(np.int64), saddles.lengths[cols]


def _path_moments(origami: Origami, x: int, grid, weight_fn, marked=False, cap=DEFAULT_CAP):
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("radius grid must be nonempty and strictly increasing")
    surf = surface(origami, marked)
    surf.require_singular()
    if not 0 <= x < len(surf.cones):
        raise ValueError(f"{x} is not a cone point id")
    rmax = float(grid[-1])
    if rmax < 1.0:
        # no saddle connection is shorter than 1
        G = len(grid)
        z = np.zeros(G)
        return {"counts": np.zeros(G, dtype=np.int64), "w0": z, "w1": z, "w2": z, "nodes": 0}
    saddles = enumerate_saddles(origami, rmax, marked)
    indptr, succ, succ_len = _successor_csr(saddles)
    init = np.nonzero(saddles.start_cone == x)[0]
    weight = weight_fn(saddles)
    return kernels.accumulate_paths(indptr, succ, succ_len, init, saddles.lengths[init], weight,
                                    grid, cap=cap)


@dataclass(frozen=True)
class VolumeCurve:
    center: int
    radii: np.ndarray
    volumes: np.ndarray
    paths: np.ndarray = field(default=None)

    @property
    def values(self) -> np.ndarray:
        return self.volumes

    def to_csv(self) -> str:
        return curve_csv(self.radii, self.volumes, ("R", "value"))


def volume(origami: Origami, x: int, R_grid, marked: bool = False, cap: int = DEFAULT_CAP) -> VolumeCurve:
    """Area of the radius-R ball about a lift of cone point ``x`` in the universal cover.

    Sum of the flat sector ``(k(x)+1) pi R^2`` and, for every saddle path p
    from x with len(p) <= R, the new sectors ``k(t(p)) pi (R - len(p))^2``
    opening at its endpoint.
    """
    surf = surface(origami, marked)
    surf.require_singular()
    ks = surf.cone_k().astype(float)
    acc = _path_moments(origami, x, R_grid, lambda S: ks[S.end_cone], marked, cap)
    R = np.asarray(R_grid, dtype=float)
    kx = surf.cones[x].k
    tail = acc["w0"] * R * R - 2.0 * acc["w1"] * R + acc["w2"]
    V = math.pi * ((kx + 1) * R * R + tail)
    return VolumeCurve(x, R, V, acc["counts"])


def count_arcs(origami: Origami, x: int, y: int, R_grid, marked: bool = False,
               cap: int = DEFAULT_CAP) -> CountCurve:
    """Number of saddle-connection paths from cone ``x`` to cone ``y`` with length <= R."""
    surf = surface(origami, marked)
    surf.require_singular()
    if not 0 <= y < len(surf.cones):
        raise ValueError(f"{y} is not a cone point id")
    acc = _path_moments(origami, x, R_grid, lambda S: (S.end_cone == y).astype(float), marked, cap)
    return CountCurve(np.asarray(R_grid, dtype=float), np.rint(acc["w0"]).astype(np.int64), x)


def count_paths_from(origami: Origami, x: int, R_grid, marked: bool = False, cap: int = DEFAULT_CAP):
    """Number of saddle-connection paths starting at ``x`` with length <= R."""
    acc = _path_moments(origami, x, R_grid, lambda S: np.ones(len(S)), marked, cap)
    return CountCurve(np.asarray(R_grid, dtype=float), acc["counts"], x)


def enumerate_sc_paths(origami: Origami, x: int, R: float, marked: bool = False, cap: int = 10**6):
    """Explicit list of saddle-connection paths from ``x`` with length <= R (small R only)."""
    saddles = enumerate_saddles(origami, R, marked) if R >= 1 else None
    if saddles is None:
        return []
    M0 = _m0_cached(origami, float(R), marked).matrix
    out = []
    stack = [((i,), saddles[i].length) for i in reversed(np.nonzero(saddles.start_cone == x)[0])]
    while stack:
        ids, length = stack.pop()
        out.append(SCPath(ids, length))
        if len(out) > cap:
            raise ResourceLimitError(cap)
        for j in reversed(np.nonzero(M0[ids[-1]])[0]):
            nl = length + saddles[j].length
            if nl <= R:
                stack.append((ids + (int(j),), nl))
    out.sort(key=lambda p: (p.total_length, p.saddles))
    return out


def closed_sc_path_lengths(origami: Origami, L: float, marked: bool = False, cap: int = 10**7):
    """Lengths of closed saddle-connection paths (cyclically geodesic) of length <= L."""
    saddles = enumerate_saddles(origami, L, marked)
    M0 = _m0_cached(origami, float(L), marked).matrix
    succ = [np.nonzero(M0[i])[0] for i in range(len(saddles))]
    lens = saddles.lengths
    out = []
    nodes = 0
    for s0 in range(len(saddles)):
        stack = [(s0, lens[s0])]
        while stack:
            s, length = stack.pop()
            nodes += 1
            if nodes > cap:
                raise ResourceLimitError(cap)
            if M0[s, s0]:
                out.append(float(length))
            for t in succ[s]:
                nl = length + lens[t]
                if nl <= L:
                    stack.append((int(t), nl))
    out.sort()
    return out


@dataclass(frozen=True)
class SurfaceHypothesisReport:
    t1_ratios: tuple
    t1_spread: float
    t2_ok: bool
    t3: ArithmeticityReport | None
    L: float
    closed_L: float


def hypothesis_check_surface(origami: Origami, L: float = 20.0, closed_L: float | None = None,
                             marked: bool = False) -> SurfaceHypothesisReport:
    """Quadratic growth of saddle counts, connectivity of M0 and non-arithmeticity.

    Closed saddle-path lengths are collected up to ``closed_L`` (default
    ``min(L, 4)``) since their number grows exponentially.
    """
    surface(origami, marked).require_singular()
    saddles = enumerate_saddles(origami, L, marked)
    ratios = tuple(saddles.count_upto(ell) / ell ** 2 for ell in (L / 4, L / 2, L))
    positive = [r for r in ratios if r > 0]
    spread = max(positive) / min(positive) if positive else math.inf
    t2 = _m0_cached(origami, float(L), marked).strongly_connected
    closed_L = min(L, 4.0) if closed_L is None else closed_L
    lengths = closed_sc_path_lengths(origami, closed_L, marked)
    t3 = check_arithmetic(lengths) if lengths else None
    return SurfaceHypothesisReport(ratios, spread, t2, t3, L, closed_L)


# -- saddle cache -------------------------------------------------------------

def cache_path(origami: Origami, L: float, marked: bool = False, directory=None) -> str:
    directory = directory or os.environ.get("VGE_CACHE_DIR") or os.path.join(os.getcwd(), ".vge_cache")
    tag = "m" if marked else "s"
    return os.path.join(directory, f"{origami.digest()}_{tag}_L{format(L, '.12g')}.csv")


def save_saddles(saddles: SaddleSet, path: str) -> bool:
    """Write the cache file once; an existing file is left untouched."""
    if os.path.exists(path):
        return False
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        fh.write(saddles.to_csv())
    os.replace(tmp, path)
    return True


def load_saddles(origami: Origami, L: float, path: str, marked: bool = False) -> SaddleSet:
    """Read a cache file, recomputing and verifying each length."""
    raw = []
    surf = surface(origami, marked)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                a, b = int(row["start_offset_den_code"]), int(row["start_offset_num"])
                p, q, m = int(row["p"]), int(row["q"]), int(row["m"])
                start = DirectionAtCone(int(row["start_cone"]), int(row["start_corner"]), a, b)
                end = DirectionAtCone(int(row["end_cone"]), int(row["end_corner"]), a, b)
                stored = float(row["length"])
            except (KeyError, ValueError) as exc:
                raise InputFormatError(f"{path}: malformed cache row: {exc}") from None
            if start.plane != (p, q):
                raise InputFormatError(f"{path}: direction ({p}, {q}) inconsistent with its sector")
            length = m * math.sqrt(p * p + q * q)
            if abs(length - stored) > 1e-10 * max(1.0, length):
                raise InputFormatError(f"{path}: stored length {stored} != recomputed {length}")
            if not (0 <= start.cone < len(surf.cones) and 0 <= end.cone < len(surf.cones)):
                raise InputFormatError(f"{path}: cone id out of range")
            raw.append((start, m, end, (m * p, m * q)))
    return _assemble(origami, float(L), raw, marked)
