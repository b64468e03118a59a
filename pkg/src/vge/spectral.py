"""Transfer matrices, Schur-complement reduction, Perron data and entropy.

Edges are indexed by the global length order of
:func:`vge.graph.merged_edge_order`.  For a real parameter ``z`` the
transfer matrix is ``M_z(a, b) = exp(-z * len(b))`` when edge ``a`` ends
where edge ``b`` starts.  Splitting the first ``k`` edges from the rest,
``W = A + B (I - D)^{-1} C`` is a ``k x k`` matrix whose Perron root
crosses one exactly at the volume entropy.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma, gammaincc

from .errors import (
    ConvergenceError,
    EntropyDivergence,
    HypothesisViolation,
    TailConditionError,
)
from .graph import (
    ARITHMETIC,
    EdgeTable,
    MetricGraph,
    edge_graph_strongly_connected,
    merged_edge_order,
    strongly_connected,
)

log = logging.getLogger(__name__)

MAX_DENSE = 4096
PERRON_TOL = 1e-12
BISECT_TOL = 1e-10
LADDER_TOL = 1e-6
SUBEXP_FLOOR = 1e-8


@dataclass(frozen=True)
class MatrixTruncation:
    K: int
    z: float
    entries: np.ndarray
    edge_table: EdgeTable


@dataclass(frozen=True)
class WMatrix:
    k: int
    sigma: float
    entries: np.ndarray
    tail_bound: float
    K: int
    upper: np.ndarray | None = None
    d_norm: float = 0.0
    certified: bool = True


@dataclass(frozen=True)
class PerronData:
    rho: float
    left: np.ndarray
    right: np.ndarray
    residual: float
    iterations: int
    lower: float = 0.0
    upper: float = 0.0


@dataclass
class EntropyResult:
    h: float
    bracket: tuple
    rho_residual: float
    ladder: list = field(default_factory=list)
    subexponential: bool = False

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "bracket": list(self.bracket),
            "rho_residual": self.rho_residual,
            "ladder": [list(r) for r in self.ladder],
            "subexponential": self.subexponential,
        }

    def to_json(self) -> str:
        return json.dumps(_round12(self.to_dict()), indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True)
class EtaValue:
    z: float
    value: float
    series_tail_bound: float


@dataclass(frozen=True)
class ResidueEstimate:
    h: float
    residue: float
    deltas_used: tuple
    extrapolation_error: float

    @property
    def residue_over_h(self) -> float:
        return self.residue / self.h


def _round12(obj):
    if isinstance(obj, float):
        return float(format(obj, ".12g"))
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round12(obj.item())
    return obj


# -- truncations ------------------------------------------------------------

def transfer_entries(table: EdgeTable, z: float) -> np.ndarray:
    src, tgt, lengths = table.sources, table.targets, table.lengths
    return (tgt[:, None] == src[None, :]) * np.exp(-z * lengths)[None, :]


def build_truncation(graph: MetricGraph, z: float, K: int) -> MatrixTruncation:
    """The ``K x K`` top-left block of the transfer matrix at parameter ``z``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    table = merged_edge_order(graph, K)
    return MatrixTruncation(len(table), z, transfer_entries(table, z), table)


def _family_remainder(f, sigma: float, n0: int) -> float:
    """Upper bound on sum_{n > n0} exp(-sigma * len_n) for one family."""
    if f.kind == ARITHMETIC:
        q = math.exp(-sigma * f.b)
        return math.exp(-sigma * f.a) * q ** (n0 + 1) / (1.0 - q)
    # terms decrease, so each is below the integral over the preceding unit interval
    c, alpha = sigma * f.a, f.b
    s = 1.0 / alpha
    x = c * float(n0) ** alpha
    return s * c ** (-s) * gamma(s) * gammaincc(s, x)


def tail_mass(graph: MetricGraph, sigma: float, K: int) -> float:
    """Upper bound on the sum of exp(-sigma * len) over edges beyond the first ``K``."""
    if sigma <= 0:
        raise ValueError("tail_mass needs sigma > 0 (the bound diverges otherwise)")
    table = merged_edge_order(graph, K)
    n_head = sum(1 for e in table if e.family < 0)
    total = sum(math.exp(-sigma * e.length) for e in graph.head_edges[n_head:])
    members = [0] * len(graph.tail_families)
    for e in table:
        if e.family >= 0:
            members[e.family] = max(members[e.family], e.member)
    for f, n0 in zip(graph.tail_families, members):
        total += _family_remainder(f, sigma, n0)
    return float(total)


def schur_W(graph: MetricGraph, sigma: float, k: int, K: int, certify: bool = True) -> WMatrix:
    """Schur-complement reduction of the ``K``-truncation onto its first ``k`` edges.

    ``entries`` is computed from the finite ``K`` block and is a lower bound
    for the untruncated reduction; ``upper`` adds a propagated bound for the
    edges beyond ``K``.  With ``certify`` the tail block must have row-sum
    norm (including neglected edges) below one.
    """
    if sigma <= 0:
        raise ValueError("schur_W needs sigma > 0")
    if not 1 <= k <= K:
        raise ValueError("need 1 <= k <= K")
    if k > MAX_DENSE:
        raise ValueError(f"k={k} exceeds the dense limit {MAX_DENSE}; use a smaller head")
    table = merged_edge_order(graph, K)
    K = len(table)
    k = min(k, K)
    M = transfer_entries(table, sigma)
    tau = tail_mass(graph, sigma, K)
    A, B, C, D = M[:k, :k], M[:k, k:], M[k:, :k], M[k:, k:]
    lengths = table.lengths
    # rows of M beyond k never exceed the total weight of edges beyond k
    q = float(np.exp(-sigma * lengths[k:]).sum()) + tau
    d_norm = float(D.sum(axis=1).max()) + tau if K > k else tau
    if certify and K > k and d_norm >= 1.0:
        raise TailConditionError(
            f"tail block norm bound {d_norm:.6g} >= 1 at sigma={sigma:.6g}; increase k"
        )
    if K > k:
        try:
            X = np.linalg.solve(np.eye(K - k) - D, C)
        except np.linalg.LinAlgError as exc:
            raise TailConditionError(f"I - D is singular at sigma={sigma:.6g}") from exc
        W = A + B @ X
    else:
        W = A.copy()
    upper = None
    if tau > 0:
        # excursions through edges beyond k that use at least one edge beyond K:
        # first step <= q, later steps <= d_norm, the far edge <= tau, exit <= s_head
        s_head = float(np.exp(-sigma * lengths[:k]).sum())
        if d_norm < 1:
            eps = s_head * tau * (1.0 / (1.0 - d_norm) + q / (1.0 - d_norm) ** 2)
        else:
            eps = math.inf
        upper = W + eps
    return WMatrix(k, sigma, W, tau, K, upper, d_norm, certify or d_norm < 1)


# -- Perron data ------------------------------------------------------------

def _as_array(W) -> np.ndarray:
    return np.asarray(W.entries if isinstance(W, WMatrix) else W, dtype=float)


def _power(A: np.ndarray, tol: float, max_iter: int, v0=None, target=None, certify=True):
    """Shifted power iteration with Collatz-Wielandt bounds.

    Returns ``(lo, hi, v, iterations)`` with lo <= rho(A) <= hi.  Stops when
    the bounds agree to ``tol`` (relative to max(rho, 1)) or, if ``target``
    is given, as soon as the bounds exclude it.  With ``certify=False``
    (reducible matrices, whose Perron vector may vanish somewhere), or
    once entries of the iterate underflow to zero, the bounds are useless;
    the iteration then stops once the max-norm growth factor settles and
    returns it as both bounds.
    """
    n = A.shape[0]
    shift = 0.5 * float(A.sum(axis=1).max())
    if shift == 0.0:
        raise ConvergenceError("zero matrix has no Perron root", residual=0.0)
    v = np.ones(n) if v0 is None else np.maximum(np.asarray(v0, dtype=float), 1e-300)
    v = v / v.max()
    lo, hi = 0.0, math.inf
    est = math.inf
    for it in range(1, max_iter + 1):
        w = A @ v + shift * v
        if certify and not np.all(v > 0):
            # entries underflowed; fall back to the growth-factor criterion
            certify = False
        if certify:
            ratio = w / v
            lo, hi = float(ratio.min()) - shift, float(ratio.max()) - shift
        wmax = float(w.max())
        v = w / wmax
        if certify:
            if hi - lo <= tol * max(hi, 1.0):
                return lo, hi, v, it
            if target is not None and (lo > target or hi < target):
                return lo, hi, v, it
        else:
            prev, est = est, wmax - shift
            if abs(est - prev) <= tol * max(est, 1.0):
                return est, est, v, it
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps (gap {hi - lo:.3g})",
        residual=hi - lo,
    )


def is_irreducible(A: np.ndarray) -> bool:
    rows, cols = np.nonzero(A > 0)
    return strongly_connected(A.shape[0], rows, cols)


def perron(W, tol: float = PERRON_TOL, max_iter: int = 200000, v0=None, check=True) -> PerronData:
    """Perron root and positive eigenvectors of a nonnegative square matrix.

    Right and left vectors come from power iteration on ``W`` and its
    transpose; the right vector has unit Euclidean norm and ``u . v = 1``.
    """
    A = _as_array(W)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("perron needs a square matrix")
    if np.any(A < 0):
        raise ValueError("perron needs a nonnegative matrix")
    if not np.any(A > 0):
        raise ConvergenceError("zero matrix has no Perron root", residual=0.0)
    irreducible = is_irreducible(A)
    if check and not irreducible:
        warnings.warn("matrix support is not strongly connected; Perron vector may have zeros",
                      RuntimeWarning, stacklevel=2)
    lo, hi, v, it = _power(A, tol, max_iter, v0, certify=irreducible)
    rho = 0.5 * (lo + hi)
    lo_u, hi_u, u, it_u = _power(A.T, tol, max_iter, certify=irreducible)
    v = v / np.linalg.norm(v)
    u = u / float(u @ v)
    residual = float(np.abs(A @ v - rho * v).max())
    return PerronData(rho, u, v, residual, it + it_u, lo, hi)


# -- entropy ------------------------------------------------------------------

class _RhoOracle:
    """log of the Perron root of W_sigma, with warm starts between calls."""

    def __init__(self, build, tol):
        self.build = build
        self.tol = tol
        self.v = None
        self.calls = 0

    def __call__(self, sigma):
        self.calls += 1
        A = self.build(sigma)
        if A is None:
            return math.inf
        v0 = self.v if self.v is not None and len(self.v) == A.shape[0] else None
        # operators (not arrays) come from callers that checked connectivity already
        certify = is_irreducible(A) if isinstance(A, np.ndarray) else True
        lo, hi, v, _ = _power(A, self.tol, 200000, v0, certify=certify)
        self.v = v
        if hi <= 0:
            return -math.inf
        if lo > 1.0:
            return math.log(lo)
        if hi < 1.0:
            return math.log(hi)
        return math.log(0.5 * (lo + hi)) if lo > 0 else math.log(hi)


def _graph_builder(graph: MetricGraph, k: int, K: int):
    def build(sigma):
        try:
            return schur_W(graph, sigma, k, K).entries
        except TailConditionError:
            pass
        table = merged_edge_order(graph, K)
        D = transfer_entries(table, sigma)[k:, k:]
        lo, hi, _, _ = _power(D, PERRON_TOL, 200000, target=1.0, certify=is_irreducible(D)) if D.any() else (0, 0, None, 0)
        if lo >= 1.0 or (hi >= 1.0 and lo >= 1.0 - 1e-12):
            # a principal block already has Perron root >= 1, so sigma is below the root
            return None
        return schur_W(graph, sigma, k, K, certify=False).entries

    return build


def solve_root(f, tol: float = BISECT_TOL, sigma0: float = 1.0, floor: float = SUBEXP_FLOOR,
               ceiling: float = 1e12):
    """Find sigma with f(sigma) = 0 for a decreasing f (f = log rho).

    Returns ``(h, (lo, hi), subexponential)``.  The bracket is grown by
    doubling/halving, then refined by Illinois-modified regula falsi with a
    bisection safeguard until it is narrower than ``tol``.
    """
    hi = sigma0
    fhi = f(hi)
    lo, flo = None, None
    while fhi >= 0:
        if fhi == 0:
            return hi, (hi, hi), False
        lo, flo = hi, fhi
        hi *= 2.0
        if hi > ceiling:
            raise EntropyDivergence(
                "entropy diverges under truncation; increase sigma range "
                "(Perron root never drops below one)"
            )
        fhi = f(hi)
    if lo is None:
        lo = hi / 2.0
        flo = f(lo)
        while flo < 0:
            hi, fhi = lo, flo
            lo /= 2.0
            if lo < floor:
                return 0.0, (0.0, hi), True
            flo = f(lo)
        if flo == 0:
            return lo, (lo, lo), False
    side = 0
    for _ in range(400):
        width = hi - lo
        if width <= tol:
            break
        if math.isfinite(flo) and math.isfinite(fhi):
            x = hi - fhi * (hi - lo) / (fhi - flo)
            # keep the trial point off the bracket ends
            if width > 64 * tol:
                x = min(max(x, lo + 0.01 * width), hi - 0.01 * width)
            if not lo < x < hi:
                x = 0.5 * (lo + hi)
        else:
            x = 0.5 * (lo + hi)
        fx = f(x)
        if fx > 0:
            lo, flo = x, fx
            if side == 1:
                fhi *= 0.5
            side = 1
        elif fx < 0:
            hi, fhi = x, fx
            if side == -1:
                flo *= 0.5
            side = -1
        else:
            return x, (x, x), False
        if hi - lo > 0.5 * width and width <= 1e6 * tol:
            # regula falsi stalled; bisect
            mid = 0.5 * (lo + hi)
            fm = f(mid)
            if fm > 0:
                lo, flo = mid, fm
            elif fm < 0:
                hi, fhi = mid, fm
            else:
                return mid, (mid, mid), False
    return 0.5 * (lo + hi), (lo, hi), False


def default_split(graph: MetricGraph):
    if graph.is_finite:
        n = graph.edge_count
        return n, n
    return 8, 40


def _entropy_at(graph, k, K, tol, perron_tol):
    oracle = _RhoOracle(_graph_builder(graph, k, K), perron_tol)
    h, bracket, subexp = solve_root(oracle, tol)
    if subexp:
        return 0.0, bracket, math.nan, True
    W = schur_W(graph, h, k, K, certify=False)
    pd = perron(W, perron_tol, check=False)
    return h, bracket, abs(pd.rho - 1.0), False


def entropy(graph: MetricGraph, k: int | None = None, K: int | None = None,
            tol: float = BISECT_TOL, ladder: bool | None = None,
            ladder_tol: float = LADDER_TOL, perron_tol: float = PERRON_TOL,
            max_K: int = MAX_DENSE) -> EntropyResult:
    """Volume entropy: the sigma where the Perron root of W_sigma equals one.

    For infinite graphs the computation is repeated with ``(k, K)`` doubled
    until successive values differ by less than ``ladder_tol`` (the ladder is
    on by default for infinite graphs).
    """
    if not all(f.satisfies_h1() for f in graph.tail_families):
        raise HypothesisViolation("a tail family violates the summability hypothesis")
    dk, dK = default_split(graph)
    k = dk if k is None else k
    K = dK if K is None else K
    if graph.is_finite:
        K = min(K, graph.edge_count)
        k = min(k, K)
    if ladder is None:
        ladder = not graph.is_finite
    table = merged_edge_order(graph, K)
    if not edge_graph_strongly_connected(table, graph.vertex_count):
        warnings.warn("edge relation on the truncation is not strongly connected (H2 check failed)",
                      RuntimeWarning, stacklevel=2)
    h, bracket, res, sub = _entropy_at(graph, k, K, tol, perron_tol)
    rungs = [(k, K, h)]
    while ladder and not graph.is_finite:
        k2, K2 = 2 * k, 2 * K
        if K2 > max_K:
            log.warning("entropy ladder stopped at K=%d before reaching tolerance", K)
            break
        h2, bracket2, res2, sub2 = _entropy_at(graph, k2, K2, tol, perron_tol)
        rungs.append((k2, K2, h2))
        done = abs(h2 - h) < ladder_tol
        k, K, h, bracket, res, sub = k2, K2, h2, bracket2, res2, sub2
        if done:
            break
    return EntropyResult(h, tuple(bracket), res, rungs, sub)


# -- eta and residue --------------------------------------------------------

def _eta_truncation(graph: MetricGraph, z: float, K: int | None):
    if K is None:
        if graph.is_finite:
            K = graph.edge_count
        else:
            K = 64
            while tail_mass(graph, z, K) > 1e-15 and 2 * K <= MAX_DENSE:
                K *= 2
    return merged_edge_order(graph, K)


def eta(graph: MetricGraph, x: int, z: float, K: int | None = None, h: float | None = None) -> EtaValue:
    """Sum over nonempty paths from ``x`` of exp(-z * len(p)), for real z > h.

    Evaluated as ``w(z) . (I - M_z)^{-1} 1`` on a ``K``-truncation, where
    ``w(z)`` carries exp(-z * len(e)) on the edges leaving ``x``.  The
    returned ``series_tail_bound`` bounds the contribution of paths that use
    an edge beyond the truncation.
    """
    if h is None:
        h = entropy(graph).h
    if not z > h:
        raise ValueError(f"eta needs z > h (z={z}, h={h})")
    table = _eta_truncation(graph, z, K)
    M = transfer_entries(table, z)
    n = len(table)
    src = table.sources
    weights = np.exp(-z * table.lengths)
    try:
        u = np.linalg.solve(np.eye(n) - M, np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"linear solve failed at z={z}") from exc
    value = float(np.dot(np.where(src == x, weights, 0.0), u))
    tau = 0.0 if graph.is_finite and n == graph.edge_count else tail_mass(graph, z, n)
    bound = 0.0
    if tau > 0:
        per_vertex = np.zeros(graph.vertex_count)
        np.add.at(per_vertex, src, weights * u)
        g = 1.0 + float(per_vertex.max())
        bound = g * g * tau / (1.0 - g * tau) if g * tau < 1 else math.inf
    if value <= 0 or not math.isfinite(value):
        raise ArithmeticError(f"eta evaluation produced {value} at z={z}")
    return EtaValue(z, value, bound)


def residue(graph: MetricGraph, x: int, h: float, deltas=(1e-2, 1e-3, 1e-4), K=None) -> ResidueEstimate:
    """Richardson-extrapolated limit of (z - h) * eta(z) as z decreases to h."""
    deltas = tuple(float(d) for d in deltas)
    f = [d * eta(graph, x, h + d, K=K, h=h).value for d in deltas]
    # Neville-style elimination of the O(delta), O(delta^2), ... terms
    table = [list(f)]
    extrapolants = []
    for j in range(1, len(deltas)):
        prev = table[-1]
        row = []
        for i in range(len(prev) - 1):
            d0, d1 = deltas[i], deltas[i + j]
            row.append((d0 * prev[i + 1] - d1 * prev[i]) / (d0 - d1))
        table.append(row)
        extrapolants.append(row[-1])
    best = table[-1][0]
    prev_best = table[-2][-1] if len(table) > 1 else f[-1]
    return ResidueEstimate(h, best, deltas, abs(best - prev_best))
