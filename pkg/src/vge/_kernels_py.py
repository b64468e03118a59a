"""Pure-Python implementations of the hot loops.

These mirror ``_kernels.pyx`` statement for statement and are used when the
compiled extension is unavailable (or ``VGE_FORCE_PYTHON=1``).
"""
import math
from bisect import bisect_left

import numpy as np


def accumulate_paths(indptr, succ, succ_len, init_state, init_len, weight, grid, z, cap):
    """Depth-first walk over all nonempty paths of length <= grid[-1].

    The transfer structure is a CSR successor list: from state ``s`` one may
    step to ``succ[j]`` at cost ``succ_len[j]`` for ``indptr[s] <= j <
    indptr[s+1]``; each row must be sorted by cost.  Initial steps are
    ``(init_state[i], init_len[i])`` sorted by cost.  A path is binned at the
    first grid point >= its length and contributes ``w = weight[last
    state]`` to the moments ``w, w*len, w*len**2`` and ``w*exp(-z*len)``.

    Returns ``(counts, w0, w1, w2, wexp, nodes, overflow)``; the binned
    arrays are per-bin (not cumulative).
    """
    indptr = [int(x) for x in indptr]
    succ = [int(x) for x in succ]
    succ_len = [float(x) for x in succ_len]
    weight = [float(x) for x in weight]
    grid = [float(x) for x in grid]
    G = len(grid)
    counts = [0] * G
    w0 = [0.0] * G
    w1 = [0.0] * G
    w2 = [0.0] * G
    we = [0.0] * G
    if G == 0:
        return _pack(counts, w0, w1, w2, we, 0, False)
    rmax = grid[-1]
    use_exp = not math.isnan(z)
    nodes = 0

    for i in range(len(init_state)):
        length0 = float(init_len[i])
        if length0 > rmax:
            break
        stack_state = [int(init_state[i])]
        stack_len = [length0]
        stack_pos = [indptr[stack_state[0]]]
        nodes += 1
        s = stack_state[0]
        g = bisect_left(grid, length0)
        w = weight[s]
        counts[g] += 1
        w0[g] += w
        w1[g] += w * length0
        w2[g] += w * length0 * length0
        if use_exp:
            we[g] += w * math.exp(-z * length0)
        while stack_state:
            s = stack_state[-1]
            p = stack_pos[-1]
            if p < indptr[s + 1]:
                nl = stack_len[-1] + succ_len[p]
                if nl > rmax:
                    stack_state.pop()
                    stack_len.pop()
                    stack_pos.pop()
                    continue
                stack_pos[-1] = p + 1
                t = succ[p]
                nodes += 1
                if nodes > cap:
                    return _pack(counts, w0, w1, w2, we, nodes, True)
                g = bisect_left(grid, nl)
                w = weight[t]
                counts[g] += 1
                w0[g] += w
                w1[g] += w * nl
                w2[g] += w * nl * nl
                if use_exp:
                    we[g] += w * math.exp(-z * nl)
                stack_state.append(t)
                stack_len.append(nl)
                stack_pos.append(indptr[t])
            else:
                stack_state.pop()
                stack_len.pop()
                stack_pos.pop()
    return _pack(counts, w0, w1, w2, we, nodes, False)


def _pack(counts, w0, w1, w2, we, nodes, overflow):
    return (
        np.array(counts, dtype=np.int64),
        np.array(w0),
        np.array(w1),
        np.array(w2),
        np.array(we),
        nodes,
        overflow,
    )


# corner types: 0 = BL, 1 = BR, 2 = TR, 3 = TL
def trace_ray(hperm, hinv, vperm, vinv, corner_vertex, stop, square, ctype, a, b, max_steps):
    """Follow a straight ray leaving the corner ``(square, ctype)``.

    The ray direction is the first-quadrant primitive vector ``(a, b)``
    (``a > 0, b >= 0``) rotated by ``ctype`` quarter turns.  ``corner_vertex``
    maps ``4*square + type`` to a vertex id and ``stop[vertex]`` marks the
    vertices where the ray ends.  At most ``max_steps`` lattice points are
    visited.

    Returns ``(m, end_square, end_type)`` where the ray ends at its m-th
    lattice point, in the sector ``(end_square, end_type)`` that contains
    the backward direction; ``m == 0`` when no stop vertex was reached.
    """
    # plane direction
    if ctype == 0:
        dx, dy = a, b
    elif ctype == 1:
        dx, dy = -b, a
    elif ctype == 2:
        dx, dy = -a, -b
    else:
        dx, dy = b, -a
    cur = square
    adx = dx if dx >= 0 else -dx
    ady = dy if dy >= 0 else -dy
    axis = adx == 0 or ady == 0
    for m in range(1, max_steps + 1):
        if axis:
            # ray runs along an edge of cur; endpoint is corner ctype+1 of cur
            v = corner_vertex[4 * cur + (ctype + 1) % 4]
            if stop[v]:
                # backward sector is the ccw successor of that corner
                et = (ctype + 1) % 4
                if et == 0:
                    nxt = hinv[cur]
                elif et == 1:
                    nxt = vinv[cur]
                elif et == 2:
                    nxt = hperm[cur]
                else:
                    nxt = vperm[cur]
                return m, nxt, (ctype + 2) % 4
            if dx > 0:
                cur = hperm[cur]
            elif dx < 0:
                cur = hinv[cur]
            elif dy > 0:
                cur = vperm[cur]
            else:
                cur = vinv[cur]
            continue
        # interior crossings ordered by t = i/adx (vertical lines) and j/ady
        i = 1
        j = 1
        while i < adx or j < ady:
            if j >= ady or (i < adx and i * ady < j * adx):
                cur = hperm[cur] if dx > 0 else hinv[cur]
                i += 1
            else:
                cur = vperm[cur] if dy > 0 else vinv[cur]
                j += 1
        et = (ctype + 2) % 4
        v = corner_vertex[4 * cur + et]
        if stop[v]:
            return m, cur, et
        # regular vertex: continue into the diagonally opposite square
        cur = hperm[cur] if dx > 0 else hinv[cur]
        cur = vperm[cur] if dy > 0 else vinv[cur]
    return 0, -1, -1
