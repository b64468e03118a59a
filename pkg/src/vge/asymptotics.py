"""Empirical asymptotic constants from count and volume curves.

Given a curve A(R) and an exponent h, the normalized values A(R) e^{-hR}
should settle to a constant when the length spectrum is non-arithmetic and
keep oscillating periodically when it is arithmetic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .counting import curve_csv
from .spectral import _round12

CONVERGENT = "convergent"
OSCILLATORY = "oscillatory"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class AsymptoticsReport:
    h_used: float
    radii: np.ndarray
    normalized: np.ndarray
    C_estimate: float
    fluctuation: float
    verdict: str
    sign_changes: int = 0
    drift: float = 0.0
    window: float = 0.3
    residue_comparison: tuple | None = None

    def to_dict(self) -> dict:
        out = {
            "h_used": self.h_used,
            "C_estimate": self.C_estimate,
            "fluctuation": self.fluctuation,
            "verdict": self.verdict,
            "sign_changes": self.sign_changes,
            "drift": self.drift,
            "window": self.window,
            "points": len(self.radii),
        }
        if self.residue_comparison is not None:
            out["residue"] = self.residue_comparison[0]
            out["residue_over_h"] = self.residue_comparison[1]
        return out

    def to_json(self) -> str:
        return json.dumps(_round12(self.to_dict()), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        return curve_csv(self.radii, self.normalized, ("R", "normalized"))


def _sign_changes(x: np.ndarray, scale: float) -> int:
    s = np.sign(np.where(np.abs(x) > 1e-12 * scale, x, 0.0))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def analyze(curve, h: float, window: float = 0.3, osc_threshold: float = 0.10,
            residue: float | None = None, min_points: int = 10) -> AsymptoticsReport:
    """Normalize ``curve`` by exp(-hR) and judge convergence over the top ``window``.

    ``curve`` is anything with ``radii`` and ``values`` (CountCurve,
    VolumeCurve).  The fluctuation is the largest relative deviation from
    the window mean and the drift is the relative change of the linear fit
    across the window.  The verdict is convergent when the fluctuation is
    below ``osc_threshold`` and the drift below a quarter of it (a slightly
    wrong h shows up as drift long before it shows up as spread).
    Oscillation is declared when the window values, after removing the
    linear trend, change sign at least three times and the fluctuation
    exceeds ``osc_threshold``.
    """
    if not h > 0:
        raise ValueError(f"h = {h} is not positive; there is no exponential asymptotic")
    if not 0 < window <= 1:
        raise ValueError("window must be in (0, 1]")
    R = np.asarray(curve.radii, dtype=float)
    A = np.asarray(curve.values, dtype=float)
    if R.size < min_points:
        raise ValueError(f"need at least {min_points} points, got {R.size}")
    y = A * np.exp(-h * R)
    cut = R[-1] - window * (R[-1] - R[0])
    top = y[R >= cut]
    Rt = R[R >= cut]
    C = float(top.mean())
    if C <= 0:
        return AsymptoticsReport(h, R, y, C, math.inf, INCONCLUSIVE, 0, math.inf, window,
                                 _residue_pair(residue, h))
    rel = top / C
    fluct = float(np.abs(rel - 1.0).max())
    changes = 0
    drift = 0.0
    if top.size >= 3:
        slope, icpt = np.polyfit(Rt - Rt.mean(), rel, 1)
        changes = _sign_changes(rel - (slope * (Rt - Rt.mean()) + icpt), 1.0)
        drift = abs(float(slope)) * float(Rt[-1] - Rt[0])
    if fluct < osc_threshold and drift < 0.25 * osc_threshold:
        verdict = CONVERGENT
    elif changes >= 3:
        verdict = OSCILLATORY
    else:
        verdict = INCONCLUSIVE
    return AsymptoticsReport(h, R, y, C, fluct, verdict, changes, drift, window,
                             _residue_pair(residue, h))


def _residue_pair(residue, h):
    if residue is None:
        return None
    return (float(residue), float(residue) / h)


@dataclass(frozen=True)
class ConstantComparison:
    ratio: float
    C: float
    D: float
    predicted: float
    h: float

    def to_dict(self) -> dict:
        return {"C": self.C, "D": self.D, "ratio": self.ratio,
                "predicted_ratio": self.predicted, "h": self.h}


def compare_constants(report_V: AsymptoticsReport, report_N: AsymptoticsReport,
                      rel_tol: float = 1e-9) -> ConstantComparison:
    """Ratio of the volume constant to the arc-count constant, for display only.

    ``predicted`` is the integral of u^2 e^{-u} over [0, inf), i.e. 2.
    """
    for name, rep in (("volume", report_V), ("count", report_N)):
        if rep.verdict != CONVERGENT:
            raise ValueError(f"{name} report is {rep.verdict}, not convergent")
    if abs(report_V.h_used - report_N.h_used) > rel_tol * max(abs(report_V.h_used), 1.0):
        raise ValueError("reports were normalized with different h")
    return ConstantComparison(report_V.C_estimate / report_N.C_estimate, report_V.C_estimate,
                              report_N.C_estimate, math.gamma(3.0), report_V.h_used)
