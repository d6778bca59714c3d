"""Exponent estimators shared by the approximation and orbit statistics.

All of them act on a cloud of points (x_i, y_i) with x increasing and
estimate the growth rate of y in x.  Three estimators are computed:

* ``tail_max``   -- max of y/x over the tail window (sup-type, biased high
  by additive constants: y/x = slope + const/x).
* ``ls_slope``   -- least-squares slope over the tail (unbiased on clean
  power laws, smears isolated spikes).
* ``max_chord``  -- max slope of chords ending at the last tail point with
  a minimum baseline in x (catches isolated spikes without the constant
  bias; falls back to the full tail chord when the window is too short).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TooFewRecords

MIN_CHORD_BASELINE = math.log(64.0)


@dataclass
class ExponentFit:
    """Result of an exponent estimation.

    ``estimate`` is the headline number for the requested ``method``;
    the other estimators are always reported alongside.
    """

    estimate: float
    method: str
    tail_max: float
    ls_slope: float
    max_chord: float
    n_used: int
    rational_point: bool = False
    floor_applied: bool = False
    points: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {
            "estimate": self.estimate,
            "method": self.method,
            "tail_max": self.tail_max,
            "ls_slope": self.ls_slope,
            "max_chord": self.max_chord,
            "n_used": self.n_used,
            "rational_point": self.rational_point,
            "floor_applied": self.floor_applied,
        }


def tail_max_ratio(xs, ys) -> float:
    return max(y / x for x, y in zip(xs, ys))


def ls_slope(xs, ys) -> float:
    if len(xs) < 2:
        return float("nan")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    xm, ym = x.mean(), y.mean()
    denom = ((x - xm) ** 2).sum()
    if denom == 0:
        return float("nan")
    return float(((x - xm) * (y - ym)).sum() / denom)


def max_chord_slope(xs, ys, min_baseline=MIN_CHORD_BASELINE) -> float:
    """Max slope of chords from earlier points to the last point."""
    if len(xs) < 2:
        return float("nan")
    xe, ye = xs[-1], ys[-1]
    best = None
    for x, y in zip(xs[:-1], ys[:-1]):
        if xe > x and xe - x >= min_baseline:
            s = (ye - y) / (xe - x)
            best = s if best is None else max(best, s)
    if best is None:
        # window shorter than the baseline floor: full chord
        if xe > xs[0]:
            best = (ye - ys[0]) / (xe - xs[0])
        else:
            best = float("nan")
    return best


def fit_exponent(xs, ys, method="max-chord", tail=None, floor=None,
                 min_points=2, min_baseline=MIN_CHORD_BASELINE) -> ExponentFit:
    """Estimate the slope of y against x from the tail of the point cloud.

    ``tail`` keeps only the last that-many points; ``floor`` clips the
    headline estimate from below (used for a-priori bounds such as the
    Dirichlet exponent).
    """
    pts = sorted(zip(map(float, xs), map(float, ys)))
    if tail is not None and tail > 0:
        pts = pts[-tail:]
    if len(pts) < min_points:
        raise TooFewRecords(f"need at least {min_points} points, got {len(pts)}")
    txs = [p[0] for p in pts]
    tys = [p[1] for p in pts]
    tmax = tail_max_ratio(txs, tys)
    ls = ls_slope(txs, tys)
    chord = max_chord_slope(txs, tys, min_baseline)
    if method == "tail-max":
        est = tmax
    elif method == "regression":
        est = ls
    elif method == "max-chord":
        est = chord
    else:
        raise ValueError(f"unknown method {method!r}")
    floored = False
    if floor is not None and not math.isnan(est) and est < floor:
        est = float(floor)
        floored = True
    return ExponentFit(estimate=est, method=method, tail_max=tmax, ls_slope=ls,
                       max_chord=chord, n_used=len(pts), floor_applied=floored,
                       points=pts)
