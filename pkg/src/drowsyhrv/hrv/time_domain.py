"""Time-domain HRV statistics. Population (N-denominator) moments throughout."""
from __future__ import annotations

import numpy as np

from ..errors import TooFewBeats
from .series import RRSeries

TIME_FEATURES = (
    "hr_mean", "hr_std", "hr_min", "hr_max",
    "sdsd", "rmssd",
    "nn20", "pnn20", "nn50", "pnn50",
    "sdnn",
)


def successive_differences(rr: np.ndarray) -> np.ndarray:
    return np.diff(np.asarray(rr, dtype=np.float64))


def compute_time_features(window: RRSeries) -> dict[str, float]:
    rr = window.intervals_ms
    if rr.size < 3:
        raise TooFewBeats(f"time-domain features need >= 3 intervals, got {rr.size}")
    hr = 60000.0 / rr
    d = successive_differences(rr)
    ad = np.abs(d)
    nn20 = int(np.count_nonzero(ad > 20.0))
    nn50 = int(np.count_nonzero(ad > 50.0))
    hr_min, hr_max = float(np.min(hr)), float(np.max(hr))
    # rounding in the mean can step outside [min, max] for near-constant series
    hr_mean = min(max(float(np.mean(hr)), hr_min), hr_max)
    return {
        "hr_mean": hr_mean,
        "hr_std": float(np.std(hr)),
        "hr_min": hr_min,
        "hr_max": hr_max,
        "sdsd": float(np.std(d)),
        "rmssd": float(np.sqrt(np.mean(d * d))),
        "nn20": float(nn20),
        "pnn20": 100.0 * nn20 / d.size,
        "nn50": float(nn50),
        "pnn50": 100.0 * nn50 / d.size,
        "sdnn": float(np.std(rr)),
    }
