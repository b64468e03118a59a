"""Compare the compiled and pure-Python kernels on the same workloads.

    python benchmarks/bench_kernels.py [--repeat N]

Each workload is run on every available backend; results are checked for
equality before timings are printed.
"""
import argparse
import math
import time

import numpy as np

from vge import kernels
from vge.counting import _transfer
from vge.graph import MetricGraph, edges_within
from vge.origami import Origami, primitive_vectors, surface


def _graph_workload(graph, R):
    table = edges_within(graph, R)
    indptr, succ, succ_len = _transfer(graph, table)
    lo, hi = indptr[0], indptr[1]
    grid = np.arange(1.0, R + 1e-9, 0.5)
    args = (indptr, succ, succ_len, succ[lo:hi], succ_len[lo:hi], np.ones(graph.vertex_count), grid)

    def run(impl):
        return kernels.accumulate_paths(*args, z=0.5, impl=impl)

    return run


def _trace_workload(origami, L):
    surf = surface(origami)
    cone = surf.cones[0]
    vecs = primitive_vectors(L)
    hp, hi, vp, vi = surf.perms

    def run(impl):
        out = []
        for square, ctype in cone.corners:
            for a, b in vecs:
                steps = int(L / math.hypot(a, b))
                out.append(kernels.trace_ray(hp, hi, vp, vi, surf.corner_vertex, surf.stop,
                                             square, ctype, a, b, steps, impl=impl))
        return out

    return run


WORKLOADS = {
    "paths {1,1} R=15": _graph_workload(MetricGraph.loops(1, 1), 15.0),
    "paths {1,sqrt2} R=16": _graph_workload(MetricGraph.loops(1, math.sqrt(2)), 16.0),
    "trace L-origami L=12": _trace_workload(Origami.from_cycles(3, [(1, 2)], [(1, 3)]), 12.0),
}


def _same(a, b):
    if isinstance(a, dict):
        return all(np.array_equal(a[k], b[k]) for k in a)
    return a == b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    impls = kernels.backends()
    print(f"backends: {', '.join(impls)}")
    print(f"{'workload':28s}" + "".join(f"{name:>12s}" for name in impls) + "     speedup")
    for name, run in WORKLOADS.items():
        results, times = {}, {}
        for bname, impl in impls.items():
            best = math.inf
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                results[bname] = run(impl)
                best = min(best, time.perf_counter() - t0)
            times[bname] = best
        ref = results["python"]
        if not all(_same(ref, r) for r in results.values()):
            raise SystemExit(f"{name}: backends disagree")
        speed = times["python"] / times["cython"] if "cython" in times else 1.0
        print(f"{name:28s}" + "".join(f"{times[b] * 1e3:10.1f}ms" for b in impls) + f"  {speed:9.1f}x")


if __name__ == "__main__":
    main()
