"""Tachogram resampling, Welch PSD and band-power features."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import welch

from ..errors import DegenerateSpectrum, SignalTooShort, TooFewBeats
from .series import RRSeries

BANDS = ("vlf", "lf", "hf")

FREQUENCY_FEATURES = (
    "vlf_peak_frequency", "vlf_absolute_power", "vlf_relative_power", "vlf_logarithmic_power",
    "lf_peak_frequency", "lf_absolute_power", "lf_relative_power", "lf_logarithmic_power",
    "hf_peak_frequency", "hf_absolute_power", "hf_relative_power", "hf_logarithmic_power",
    "total_power", "lf_normalized", "hf_normalized", "lf_hf_ratio",
)


@dataclass(frozen=True)
class SpectralConfig:
    resample_hz: float = 4.0
    fft_bins: int = 4096
    segment_len: int = 256
    segment_overlap_frac: float = 0.5
    vlf_band: tuple[float, float] = (0.0, 0.04)
    lf_band: tuple[float, float] = (0.04, 0.15)
    hf_band: tuple[float, float] = (0.15, 0.40)

    def __post_init__(self):
        for name in ("vlf_band", "lf_band", "hf_band"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.resample_hz <= 0:
            raise ValueError("resample_hz must be positive")
        if self.fft_bins < 8 or self.fft_bins & (self.fft_bins - 1):
            raise ValueError("fft_bins must be a power of two >= 8")
        if self.segment_len < 8:
            raise ValueError("segment_len must be >= 8")
        if not 0.0 <= self.segment_overlap_frac < 1.0:
            raise ValueError("segment_overlap_frac must be in [0, 1)")
        edges = [self.vlf_band, self.lf_band, self.hf_band]
        for lo, hi in edges:
            if not lo < hi:
                raise ValueError(f"empty band {lo, hi}")
        if self.vlf_band[1] != self.lf_band[0] or self.lf_band[1] != self.hf_band[0]:
            raise ValueError("bands must be contiguous")
        if self.hf_band[1] > self.resample_hz / 2:
            raise ValueError("HF band exceeds the Nyquist frequency")

    def band(self, name: str) -> tuple[float, float]:
        return getattr(self, f"{name}_band")


def resample_tachogram(window: RRSeries, config: SpectralConfig = SpectralConfig()) -> np.ndarray:
    """Cubic-spline interpolate (beat time, interval) at ``resample_hz``, mean removed."""
    if len(window) < 4:
        raise TooFewBeats(f"resampling needs >= 4 beats, got {len(window)}")
    t = window.beat_times_s
    n = math.floor(window.duration_s * config.resample_hz)
    grid = t[0] + np.arange(n) / config.resample_hz
    x = CubicSpline(t, window.intervals_ms)(grid)
    return x - x.mean() if n else x


def welch_psd(signal: np.ndarray, config: SpectralConfig = SpectralConfig()):
    """Hann-windowed Welch estimate in ms^2/Hz. Returns ``(freqs, psd)``.

    Density scaling makes the integral of the one-sided PSD match the signal
    variance.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.size < 8:
        raise SignalTooShort(f"Welch PSD needs >= 8 samples, got {x.size}")
    nperseg = min(config.segment_len, x.size)
    noverlap = int(nperseg * config.segment_overlap_frac)
    nfft = max(config.fft_bins, nperseg)
    freqs, psd = welch(
        x, fs=config.resample_hz, window="hann", nperseg=nperseg,
        noverlap=noverlap, nfft=nfft, detrend="constant", scaling="density",
    )
    return freqs, psd


def band_power(freqs: np.ndarray, psd: np.ndarray, lo: float, hi: float) -> float:
    """Trapezoidal integral of the linearly interpolated PSD over [lo, hi].

    Band edges are interpolated rather than snapped to bins, so adjacent
    bands tile the axis with no gap or double counting.
    """
    inner = (freqs > lo) & (freqs < hi)
    f = np.concatenate(([lo], freqs[inner], [hi]))
    p = np.concatenate(([np.interp(lo, freqs, psd)], psd[inner], [np.interp(hi, freqs, psd)]))
    return float(np.trapezoid(p, f))


def band_features(freqs: np.ndarray, psd: np.ndarray, config: SpectralConfig = SpectralConfig()) -> dict[str, float]:
    out: dict[str, float] = {}
    powers = {}
    for name in BANDS:
        lo, hi = config.band(name)
        in_band = (freqs >= lo) & (freqs < hi)
        if not np.any(in_band):
            raise DegenerateSpectrum(f"no frequency bins inside the {name} band")
        idx = np.flatnonzero(in_band)
        out[f"{name}_peak_frequency"] = float(freqs[idx[np.argmax(psd[idx])]])
        powers[name] = band_power(freqs, psd, lo, hi)
    total = powers["vlf"] + powers["lf"] + powers["hf"]
    if not total > 0:
        raise DegenerateSpectrum("total spectral power is zero")
    if not powers["hf"] > 0:
        raise DegenerateSpectrum("HF power is zero; LF/HF undefined")
    for name in BANDS:
        if not powers[name] > 0:
            raise DegenerateSpectrum(f"{name} power is zero; log power undefined")
        out[f"{name}_absolute_power"] = powers[name]
        out[f"{name}_relative_power"] = 100.0 * powers[name] / total
        out[f"{name}_logarithmic_power"] = math.log(powers[name])
    lf, hf = powers["lf"], powers["hf"]
    out["total_power"] = total
    out["lf_normalized"] = 100.0 * lf / (lf + hf)
    out["hf_normalized"] = 100.0 * hf / (lf + hf)
    out["lf_hf_ratio"] = lf / hf
    return {k: out[k] for k in FREQUENCY_FEATURES}


def compute_frequency_features(window: RRSeries, config: SpectralConfig = SpectralConfig()) -> dict[str, float]:
    freqs, psd = welch_psd(resample_tachogram(window, config), config)
    return band_features(freqs, psd, config)
