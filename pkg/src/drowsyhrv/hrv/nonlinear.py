"""Poincare descriptors and short-term detrended fluctuation analysis."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..errors import DegenerateSeries, TooFewBeats
from .series import RRSeries

NONLINEAR_FEATURES = ("dfa_alpha1", "sd1", "sd2", "sd2_sd1_ratio")

DFA_SCALES = tuple(range(4, 17))
DFA_MIN_INTERVALS = 32


class Poincare(NamedTuple):
    sd1: float
    sd2: float
    # None when sd1 == 0: the ratio is undefined and callers must decide
    ratio: float | None


def compute_poincare(window: RRSeries) -> Poincare:
    rr = window.intervals_ms
    if rr.size < 3:
        raise TooFewBeats(f"Poincare descriptors need >= 3 intervals, got {rr.size}")
    d = np.diff(rr)
    sdsd2 = float(np.var(d))
    sdnn2 = float(np.var(rr))
    sd1 = float(np.sqrt(0.5 * sdsd2))
    sd2 = float(np.sqrt(max(2.0 * sdnn2 - 0.5 * sdsd2, 0.0)))
    ratio = sd2 / sd1 if sd1 > 0 else None
    return Poincare(sd1, sd2, ratio)


def fluctuation(rr: np.ndarray, scales=DFA_SCALES) -> np.ndarray:
    """RMS residual F(n) of the linearly detrended integrated profile per box size."""
    x = np.asarray(rr, dtype=np.float64)
    y = np.cumsum(x - x.mean())
    out = np.empty(len(scales))
    for i, n in enumerate(scales):
        n_boxes = y.size // n
        boxes = y[: n_boxes * n].reshape(n_boxes, n)
        t = np.arange(n, dtype=np.float64)
        tc = t - t.mean()
        # closed-form least squares line per box
        slope = (boxes - boxes.mean(axis=1, keepdims=True)) @ tc / (tc @ tc)
        fit = boxes.mean(axis=1, keepdims=True) + slope[:, None] * tc[None, :]
        out[i] = np.sqrt(np.mean((boxes - fit) ** 2))
    return out


def compute_dfa_alpha1(window: RRSeries, scales=DFA_SCALES) -> float:
    rr = window.intervals_ms
    if rr.size < DFA_MIN_INTERVALS:
        raise TooFewBeats(f"DFA needs >= {DFA_MIN_INTERVALS} intervals, got {rr.size}")
    f = fluctuation(rr, scales)
    if not np.all(f > 0):
        raise DegenerateSeries("zero fluctuation at some scale; alpha1 undefined")
    slope, _ = np.polyfit(np.log(np.asarray(scales, dtype=np.float64)), np.log(f), 1)
    return float(slope)
