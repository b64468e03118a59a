"""Command-line interface: ``vge graph ...`` and ``vge origami ...``.

Exit codes: 0 success, 1 usage or numerical failure, 2 bad input file,
3 hypothesis violation, 4 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

import numpy as np

from . import asymptotics, counting, graph as graph_mod, origami as ori, spectral
from .counting import fmt
from .errors import HypothesisViolation, InputFormatError, ResourceLimitError, VGEError

log = logging.getLogger("vge")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_CAP = range(5)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text):
    x = float(text)
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def _nonneg_float(text):
    x = float(text)
    if not (x >= 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return x


def _positive_int(text):
    x = int(text)
    if x < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return x


def radius_grid(rmin, rmax, step) -> np.ndarray:
    """rmin, rmin + step, ... up to rmax, rounded to 12 digits so rows are reproducible."""
    if rmin is None:
        rmin = step
    if rmax < rmin:
        raise UsageError(f"--rmax {rmax} is below --rmin {rmin}")
    n = int(math.floor((rmax - rmin) / step + 1e-9)) + 1
    return np.array([float(format(rmin + i * step, ".12g")) for i in range(n)])


# -- rendering ------------------------------------------------------------

def _json(obj) -> str:
    return json.dumps(spectral._round12(obj), indent=2, sort_keys=True) + "\n"


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _curve_out(args, radii, values, name):
    if args.emit == "json":
        return _json({"R": [float(r) for r in radii],
                      name: [v.item() if isinstance(v, np.generic) else v for v in values]})
    return counting.curve_csv(radii, values, ("R", "value"))


# -- graph commands ----------------------------------------------------------

def _graph(args):
    return graph_mod.load_graph(args.input)


def _check_vertex(g, x):
    if not 0 <= x < g.vertex_count:
        raise UsageError(f"--center {x} is not a vertex (graph has {g.vertex_count})")


def cmd_graph_entropy(args):
    g = _graph(args)
    res = spectral.entropy(g, k=args.k, K=args.K, tol=args.tol, ladder=args.ladder,
                           ladder_tol=args.ladder_tol)
    if args.emit == "csv":
        return _table(("k", "K", "h"), res.ladder)
    return res.to_json()


def cmd_graph_count(args):
    g = _graph(args)
    _check_vertex(g, args.center)
    grid = radius_grid(args.rmin, args.rmax, args.step)
    curve = counting.count_paths(g, args.center, grid, cap=args.cap)
    return _curve_out(args, curve.radii, curve.counts, "count")


def cmd_graph_eta(args):
    g = _graph(args)
    _check_vertex(g, args.center)
    h = spectral.entropy(g).h
    zs = args.z if args.z else [h + d for d in (0.25, 0.5, 1.0)]
    rows = []
    for z in zs:
        ev = spectral.eta(g, args.center, z, h=h)
        rows.append({"z": z, "eta": ev.value, "series_tail_bound": ev.series_tail_bound})
    out = {"h": h, "center": args.center, "values": rows}
    if args.residue:
        if h <= 0:
            raise HypothesisViolation("residue requested but the entropy is zero")
        r = spectral.residue(g, args.center, h)
        out["residue"] = {"value": r.residue, "over_h": r.residue_over_h,
                          "extrapolation_error": r.extrapolation_error}
    if args.emit == "csv":
        return _table(("z", "eta", "series_tail_bound"),
                      [(float(r["z"]), r["eta"], r["series_tail_bound"]) for r in rows])
    return _json(out)


def _report_out(args, report):
    if args.emit == "csv":
        return report.to_csv()
    return report.to_json()


def cmd_graph_asym(args):
    g = _graph(args)
    _check_vertex(g, args.center)
    h = args.h if args.h is not None else spectral.entropy(g).h
    if h <= 0:
        raise HypothesisViolation("entropy is zero; growth is subexponential")
    grid = radius_grid(args.rmin, args.rmax, args.step)
    curve = counting.count_paths(g, args.center, grid, cap=args.cap)
    res = None
    if args.residue:
        res = spectral.residue(g, args.center, h).residue
    report = asymptotics.analyze(curve, h, window=args.window, osc_threshold=args.threshold,
                                 residue=res)
    return _report_out(args, report)


def cmd_graph_check(args):
    g = _graph(args)
    rep = graph_mod.check_hypotheses(g, K=args.K, L=args.L)
    out = {"H1": rep.h1_ok, "H2": rep.h2_ok, "K": rep.K, "L": rep.L,
           "H3": _arith_dict(rep.h3)}
    if args.emit == "csv":
        return _table(("hypothesis", "holds"),
                      [("H1", rep.h1_ok), ("H2", rep.h2_ok),
                       ("H3", None if rep.h3 is None else not rep.h3.is_arithmetic)])
    return _json(out)


def _arith_dict(a):
    if a is None:
        return None
    return {"non_arithmetic": not a.is_arithmetic, "is_arithmetic": a.is_arithmetic,
            "d": a.d if a.is_arithmetic else None, "inconclusive": a.inconclusive,
            "max_residual": a.max_residual, "tol": a.tol,
            "witnesses": [list(w) for w in a.witnesses]}


# -- origami commands --------------------------------------------------------

def _origami(args):
    return ori.load_origami(args.input)


def _check_cone(o, x, marked):
    cones = ori.cone_points(o, marked)
    if not 0 <= x < len(cones):
        raise UsageError(f"cone point {x} does not exist (there are {len(cones)})")


def cmd_origami_info(args):
    o = _origami(args)
    cones = ori.cone_points(o, args.marked)
    out = {
        "n": o.n,
        "genus": o.genus(),
        "vertex_orbits": len(o.vertex_orbits()),
        "cone_points": [
            {"id": c.id, "k": c.k, "angle_over_pi": 2 * (c.k + 1),
             "corners": [[s + 1, ori.CORNER_NAMES[t]] for s, t in c.corners]}
            for c in cones
        ],
    }
    if args.emit == "csv":
        return _table(("id", "k", "angle_over_pi", "corners"),
                      [(c.id, c.k, 2 * (c.k + 1), len(c.corners)) for c in cones])
    return _json(out)


def _saddles(args, o, L):
    if getattr(args, "cache", False):
        path = ori.cache_path(o, L, args.marked, args.cache_dir)
        if os.path.exists(path):
            log.info("loading saddle connections from %s", path)
            return ori.load_saddles(o, L, path, args.marked)
        S = ori.enumerate_saddles(o, L, args.marked, threads=args.threads)
        ori.save_saddles(S, path)
        return S
    return ori.enumerate_saddles(o, L, args.marked, threads=args.threads)


def cmd_origami_saddles(args):
    o = _origami(args)
    S = _saddles(args, o, args.L)
    if args.emit == "json":
        rows = []
        for s in S:
            rows.append({"id": s.id, "start": [s.start.cone, s.start.corner_index],
                         "end": [s.end.cone, s.end.corner_index],
                         "holonomy": list(s.holonomy), "length": s.length,
                         "reverse_id": s.reverse_id})
        return _json({"L": args.L, "count": len(S), "saddles": rows})
    return S.to_csv()


def cmd_origami_entropy(args):
    o = _origami(args)
    res = ori.surface_entropy(o, args.L, tol=args.tol, tol_ladder=args.ladder_tol,
                              ladder=args.ladder, max_L=args.max_L, marked=args.marked)
    if args.emit == "csv":
        return _table(("L", "count", "h"), [(float(L), c, h) for L, c, h in res.ladder])
    return res.to_json()


def cmd_origami_volume(args):
    o = _origami(args)
    _check_cone(o, args.center, args.marked)
    grid = radius_grid(args.rmin, args.rmax, args.step)
    vc = ori.volume(o, args.center, grid, args.marked, cap=args.cap)
    return _curve_out(args, vc.radii, vc.volumes, "volume")


def cmd_origami_arcs(args):
    o = _origami(args)
    _check_cone(o, args.center, args.marked)
    target = args.center if args.target is None else args.target
    _check_cone(o, target, args.marked)
    grid = radius_grid(args.rmin, args.rmax, args.step)
    cc = ori.count_arcs(o, args.center, target, grid, args.marked, cap=args.cap)
    return _curve_out(args, cc.radii, cc.counts, "count")


def cmd_origami_asym(args):
    o = _origami(args)
    _check_cone(o, args.center, args.marked)
    h = args.h if args.h is not None else ori.surface_entropy(o, marked=args.marked).h
    grid = radius_grid(args.rmin, args.rmax, args.step)
    if args.quantity == "volume":
        curve = ori.volume(o, args.center, grid, args.marked, cap=args.cap)
    else:
        curve = ori.count_arcs(o, args.center, args.center, grid, args.marked, cap=args.cap)
    report = asymptotics.analyze(curve, h, window=args.window, osc_threshold=args.threshold)
    return _report_out(args, report)


def cmd_origami_check(args):
    o = _origami(args)
    rep = ori.hypothesis_check_surface(o, args.L, args.closed_L, args.marked)
    if args.emit == "csv":
        return _table(("hypothesis", "holds"),
                      [("T1", rep.t1_spread <= 1.5), ("T2", rep.t2_ok),
                       ("T3", None if rep.t3 is None else not rep.t3.is_arithmetic)])
    return _json({"L": rep.L, "closed_L": rep.closed_L,
                  "T1": {"ratios": list(rep.t1_ratios), "spread": rep.t1_spread},
                  "T2": rep.t2_ok, "T3": _arith_dict(rep.t3)})


# -- parser ------------------------------------------------------------------

def _common(p, emit="json"):
    p.add_argument("input", help="input JSON file")
    p.add_argument("--emit", choices=("json", "csv"), default=emit)
    p.add_argument("--output", "-o", help="write to this file instead of stdout")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)


def _grid(p, rmax=None, step=0.05):
    p.add_argument("--center", type=int, default=0)
    p.add_argument("--rmin", type=_nonneg_float, default=None, help="first radius (default: step)")
    p.add_argument("--rmax", type=_positive_float, required=rmax is None, default=rmax)
    p.add_argument("--step", type=_positive_float, default=step)
    p.add_argument("--cap", type=_positive_int, default=counting.DEFAULT_CAP,
                   help="maximum number of enumerated paths")


def _asym_opts(p):
    p.add_argument("--h", type=float, default=None, help="use this exponent instead of computing it")
    p.add_argument("--window", type=_positive_float, default=0.3)
    p.add_argument("--threshold", type=_positive_float, default=0.10)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vge", description="Volume entropy and counting asymptotics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    top = parser.add_subparsers(dest="domain", required=True, parser_class=_Parser)

    g = top.add_parser("graph", help="metric graphs").add_subparsers(dest="command", required=True,
                                                                      parser_class=_Parser)
    p = g.add_parser("entropy", help="volume entropy h")
    _common(p)
    p.add_argument("--tol", type=_positive_float, default=spectral.BISECT_TOL)
    p.add_argument("--k", type=_positive_int, default=None, help="head block size")
    p.add_argument("--K", type=_positive_int, default=None, help="truncation size")
    p.add_argument("--ladder", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--ladder-tol", type=_positive_float, default=spectral.LADDER_TOL)
    p.set_defaults(func=cmd_graph_entropy)

    p = g.add_parser("count", help="number of paths of length <= R")
    _common(p, "csv")
    _grid(p)
    p.set_defaults(func=cmd_graph_count)

    p = g.add_parser("eta", help="eta(z) by linear solve, optional residue at h")
    _common(p)
    p.add_argument("--center", type=int, default=0)
    p.add_argument("--z", type=_positive_float, action="append")
    p.add_argument("--residue", action="store_true")
    p.set_defaults(func=cmd_graph_eta)

    p = g.add_parser("asym", help="normalized counts and convergence verdict")
    _common(p)
    _grid(p)
    _asym_opts(p)
    p.add_argument("--residue", action="store_true")
    p.set_defaults(func=cmd_graph_asym)

    p = g.add_parser("check", help="summability, connectivity and non-arithmeticity checks")
    _common(p)
    p.add_argument("--K", type=_positive_int, default=64)
    p.add_argument("--L", type=_positive_float, default=6.0)
    p.set_defaults(func=cmd_graph_check)

    o = top.add_parser("origami", help="square-tiled surfaces").add_subparsers(
        dest="command", required=True, parser_class=_Parser)

    def surf(name, help_, emit="json"):
        sp = o.add_parser(name, help=help_)
        _common(sp, emit)
        sp.add_argument("--marked", action="store_true", help="treat regular vertices as cone points")
        return sp

    p = surf("info", "cone points and genus")
    p.set_defaults(func=cmd_origami_info)

    p = surf("saddles", "saddle connections of length <= L", "csv")
    p.add_argument("--L", type=_positive_float, required=True)
    p.add_argument("--cache", action="store_true", help="read/write the saddle cache")
    p.add_argument("--cache-dir", default=None, help="cache directory (default $VGE_CACHE_DIR)")
    p.set_defaults(func=cmd_origami_saddles)

    p = surf("entropy", "entropy from the saddle-connection transfer matrix")
    p.add_argument("--L", type=_positive_float, default=8.0)
    p.add_argument("--max-L", type=_positive_float, default=64.0)
    p.add_argument("--tol", type=_positive_float, default=spectral.BISECT_TOL)
    p.add_argument("--ladder", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--ladder-tol", type=_positive_float, default=1e-2)
    p.set_defaults(func=cmd_origami_entropy)

    p = surf("volume", "ball volume V(x, R)", "csv")
    _grid(p)
    p.set_defaults(func=cmd_origami_volume)

    p = surf("arcs", "saddle-connection path counts N(x, y, R)", "csv")
    _grid(p)
    p.add_argument("--target", type=int, default=None, help="end cone point (default: center)")
    p.set_defaults(func=cmd_origami_arcs)

    p = surf("asym", "normalized volume or arc counts and convergence verdict")
    _grid(p)
    _asym_opts(p)
    p.add_argument("--quantity", choices=("volume", "arcs"), default="volume")
    p.set_defaults(func=cmd_origami_asym)

    p = surf("check", "saddle growth, connectivity and non-arithmeticity checks")
    p.add_argument("--L", type=_positive_float, default=20.0)
    p.add_argument("--closed-L", type=_positive_float, default=None)
    p.set_defaults(func=cmd_origami_check)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        text = args.func(args)
    except UsageError as exc:
        print(f"vge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputFormatError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"vge: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HypothesisViolation as exc:
        print(f"vge: hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except ResourceLimitError as exc:
        print(f"vge: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (VGEError, ValueError, ArithmeticError) as exc:
        print(f"vge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
