"""RR-interval containers, sliding-window segmentation and RR file readers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

MIN_WINDOW_S = 60
MAX_WINDOW_S = 210


@dataclass(frozen=True)
class RRSeries:
    """Inter-beat (NN) intervals in milliseconds.

    Interval ``i`` is stamped at the time of the beat that closes it. The
    first interval is stamped at ``start_time_s``, so the timestamp of
    interval ``i`` is ``start_time_s + (sum(rr[:i+1]) - rr[0]) / 1000``.
    """

    intervals_ms: np.ndarray
    start_time_s: float = 0.0
    _times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rr = np.asarray(self.intervals_ms, dtype=np.float64).reshape(-1)
        if rr.size and not np.all(rr > 0):
            raise ValueError("RR intervals must be strictly positive")
        if not np.all(np.isfinite(rr)):
            raise ValueError("RR intervals must be finite")
        rr.setflags(write=False)
        object.__setattr__(self, "intervals_ms", rr)
        times = float(self.start_time_s) + (np.cumsum(rr) - (rr[0] if rr.size else 0.0)) / 1000.0
        times.setflags(write=False)
        object.__setattr__(self, "_times", times)

    def __len__(self) -> int:
        return int(self.intervals_ms.size)

    @property
    def beat_times_s(self) -> np.ndarray:
        return self._times

    @property
    def duration_s(self) -> float:
        if len(self) < 2:
            return 0.0
        return float(self._times[-1] - self._times[0])

    def reversed(self) -> RRSeries:
        return RRSeries(self.intervals_ms[::-1].copy(), self.start_time_s)


@dataclass(frozen=True)
class WindowSpec:
    window_size_s: int

    def __post_init__(self):
        w = self.window_size_s
        if isinstance(w, bool) or int(w) != w:
            raise ValueError(f"window size must be an integer number of seconds, got {w!r}")
        object.__setattr__(self, "window_size_s", int(w))
        if not MIN_WINDOW_S <= self.window_size_s <= MAX_WINDOW_S:
            raise ValueError(
                f"window size {self.window_size_s}s outside [{MIN_WINDOW_S}, {MAX_WINDOW_S}]"
            )

    @property
    def overlap_s(self) -> Fraction:
        return Fraction(self.window_size_s, 2)


def window_count(session_length_s: float, window_size_s: float) -> int:
    """Number of half-overlapping windows in a session: floor(2S/W - 1), at least 0."""
    s = Fraction(session_length_s)
    w = Fraction(window_size_s)
    if s <= 0 or w <= 0:
        raise ValueError("session length and window size must be positive")
    return max(0, math.floor(2 * s / w - 1))


def segment_windows(series: RRSeries, session_length_s: float, spec: WindowSpec) -> list[RRSeries]:
    """Split a session into windows of W seconds with a W/2-second hop.

    Window ``k`` holds every interval whose timestamp lies in
    ``[k*W/2, k*W/2 + W)``. Sessions shorter than one window give ``[]``.
    """
    if session_length_s <= 0:
        raise ValueError("session_length_s must be positive")
    n = window_count(session_length_s, spec.window_size_s)
    times = series.beat_times_s
    rr = series.intervals_ms
    w = spec.window_size_s
    windows = []
    for k in range(n):
        lo = k * w / 2
        hi = lo + w
        # k*W/2 is exact in binary for integer W, so the float bounds are exact
        i0 = int(np.searchsorted(times, lo, side="left"))
        i1 = int(np.searchsorted(times, hi, side="left"))
        if i1 > i0:
            windows.append(RRSeries(rr[i0:i1].copy(), float(times[i0])))
        else:
            windows.append(RRSeries(np.empty(0), float(lo)))
    return windows


def read_rr_file(path: str | Path, start_time_s: float = 0.0) -> RRSeries:
    """Read one interval (ms) per row; a non-numeric first row is treated as a header.

    Comma separated rows use their last column, so ``time,rr`` files work too.
    """
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            token = line.split(",")[-1].strip()
            try:
                values.append(float(token))
            except ValueError:
                if lineno == 0 and not values:
                    continue
                raise ValueError(f"{path}:{lineno + 1}: not a number: {token!r}") from None
    return RRSeries(np.asarray(values, dtype=np.float64), start_time_s)


def write_rr_file(path: str | Path, series: RRSeries) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rr_ms\n")
        for v in series.intervals_ms:
            fh.write(f"{float(v)!r}\n")
