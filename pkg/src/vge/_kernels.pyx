# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; see ``_kernels_py`` for the reference semantics."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, isnan

cnp.import_array()


cdef inline Py_ssize_t _bin(const double[::1] grid, Py_ssize_t G, double x) noexcept nogil:
    # first index with grid[i] >= x
    cdef Py_ssize_t lo = 0, hi = G, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if grid[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def accumulate_paths(indptr, succ, succ_len, init_state, init_len, weight, grid, double z, long long cap):
    cdef const long long[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const long long[::1] sc = np.ascontiguousarray(succ, dtype=np.int64)
    cdef const double[::1] sl = np.ascontiguousarray(succ_len, dtype=np.float64)
    cdef const long long[::1] ist = np.ascontiguousarray(init_state, dtype=np.int64)
    cdef const double[::1] il = np.ascontiguousarray(init_len, dtype=np.float64)
    cdef const double[::1] wt = np.ascontiguousarray(weight, dtype=np.float64)
    cdef const double[::1] gr = np.ascontiguousarray(grid, dtype=np.float64)
    cdef Py_ssize_t G = gr.shape[0]

    counts_a = np.zeros(G, dtype=np.int64)
    w0_a = np.zeros(G)
    w1_a = np.zeros(G)
    w2_a = np.zeros(G)
    we_a = np.zeros(G)
    if G == 0:
        return counts_a, w0_a, w1_a, w2_a, we_a, 0, False
    cdef long long[::1] counts = counts_a
    cdef double[::1] w0 = w0_a
    cdef double[::1] w1 = w1_a
    cdef double[::1] w2 = w2_a
    cdef double[::1] we = we_a

    cdef double rmax = gr[G - 1]
    cdef double minlen = 0.0
    if sl.shape[0] > 0:
        minlen = np.min(sl)
    cdef Py_ssize_t depth_cap
    if minlen > 0:
        depth_cap = <Py_ssize_t>(rmax / minlen) + 4
    else:
        depth_cap = 4
    st_a = np.empty(depth_cap, dtype=np.int64)
    ln_a = np.empty(depth_cap, dtype=np.float64)
    ps_a = np.empty(depth_cap, dtype=np.int64)
    cdef long long[::1] st = st_a
    cdef double[::1] ln = ln_a
    cdef long long[::1] ps = ps_a

    cdef bint use_exp = not isnan(z)
    cdef long long nodes = 0
    cdef bint overflow = False
    cdef Py_ssize_t i, g, depth
    cdef long long s, t, p
    cdef double l0, nl, w

    with nogil:
        for i in range(ist.shape[0]):
            l0 = il[i]
            if l0 > rmax:
                break
            s = ist[i]
            nodes += 1
            if nodes > cap:
                overflow = True
                break
            g = _bin(gr, G, l0)
            w = wt[s]
            counts[g] += 1
            w0[g] += w
            w1[g] += w * l0
            w2[g] += w * l0 * l0
            if use_exp:
                we[g] += w * exp(-z * l0)
            depth = 0
            st[0] = s
            ln[0] = l0
            ps[0] = ip[s]
            depth = 1
            while depth > 0:
                s = st[depth - 1]
                p = ps[depth - 1]
                if p < ip[s + 1]:
                    nl = ln[depth - 1] + sl[p]
                    if nl > rmax:
                        depth -= 1
                        continue
                    ps[depth - 1] = p + 1
                    t = sc[p]
                    nodes += 1
                    if nodes > cap:
                        overflow = True
                        break
                    g = _bin(gr, G, nl)
                    w = wt[t]
                    counts[g] += 1
                    w0[g] += w
                    w1[g] += w * nl
                    w2[g] += w * nl * nl
                    if use_exp:
                        we[g] += w * exp(-z * nl)
                    st[depth] = t
                    ln[depth] = nl
                    ps[depth] = ip[t]
                    depth += 1
                else:
                    depth -= 1
            if overflow:
                break
    return counts_a, w0_a, w1_a, w2_a, we_a, nodes, bool(overflow)


def trace_ray(hperm, hinv, vperm, vinv, corner_vertex, stop, long long square, int ctype,
              long long a, long long b, long long max_steps):
    cdef const long long[::1] hp = np.ascontiguousarray(hperm, dtype=np.int64)
    cdef const long long[::1] hi = np.ascontiguousarray(hinv, dtype=np.int64)
    cdef const long long[::1] vp = np.ascontiguousarray(vperm, dtype=np.int64)
    cdef const long long[::1] vi = np.ascontiguousarray(vinv, dtype=np.int64)
    cdef const long long[::1] cv = np.ascontiguousarray(corner_vertex, dtype=np.int64)
    cdef const unsigned char[::1] sp = np.ascontiguousarray(stop, dtype=np.uint8)
    return _trace(hp, hi, vp, vi, cv, sp, square, ctype, a, b, max_steps)


cdef tuple _trace(const long long[::1] hp, const long long[::1] hi, const long long[::1] vp,
                  const long long[::1] vi, const long long[::1] cv, const unsigned char[::1] sp,
                  long long square, int ctype, long long a, long long b, long long max_steps):
    cdef long long dx, dy, adx, ady, cur = square, m, i, j, v, nxt
    cdef int et
    if ctype == 0:
        dx = a; dy = b
    elif ctype == 1:
        dx = -b; dy = a
    elif ctype == 2:
        dx = -a; dy = -b
    else:
        dx = b; dy = -a
    adx = dx if dx >= 0 else -dx
    ady = dy if dy >= 0 else -dy
    cdef bint axis = adx == 0 or ady == 0
    for m in range(1, max_steps + 1):
        if axis:
            et = (ctype + 1) % 4
            v = cv[4 * cur + et]
            if sp[v]:
                if et == 0:
                    nxt = hi[cur]
                elif et == 1:
                    nxt = vi[cur]
                elif et == 2:
                    nxt = hp[cur]
                else:
                    nxt = vp[cur]
                return m, nxt, (ctype + 2) % 4
            if dx > 0:
                cur = hp[cur]
            elif dx < 0:
                cur = hi[cur]
            elif dy > 0:
                cur = vp[cur]
            else:
                cur = vi[cur]
            continue
        i = 1
        j = 1
        while i < adx or j < ady:
            if j >= ady or (i < adx and i * ady < j * adx):
                cur = hp[cur] if dx > 0 else hi[cur]
                i += 1
            else:
                cur = vp[cur] if dy > 0 else vi[cur]
                j += 1
        et = (ctype + 2) % 4
        v = cv[4 * cur + et]
        if sp[v]:
            return m, cur, et
        cur = hp[cur] if dx > 0 else hi[cur]
        cur = vp[cur] if dy > 0 else vi[cur]
    return 0, -1, -1
