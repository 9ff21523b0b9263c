"""Windowing and HRV feature extraction."""
from .features import FEATURE_DOMAINS, FEATURE_NAMES, HrvFeatureVector, compute_feature_vector
from .nonlinear import Poincare, compute_dfa_alpha1, compute_poincare
from .series import RRSeries, WindowSpec, read_rr_file, segment_windows, window_count, write_rr_file
from .spectral import (
    SpectralConfig,
    band_features,
    band_power,
    compute_frequency_features,
    resample_tachogram,
    welch_psd,
)
from .time_domain import compute_time_features

__all__ = [
    "FEATURE_DOMAINS", "FEATURE_NAMES", "HrvFeatureVector", "Poincare", "RRSeries",
    "SpectralConfig", "WindowSpec", "band_features", "band_power", "compute_dfa_alpha1",
    "compute_feature_vector", "compute_frequency_features", "compute_poincare",
    "compute_time_features", "read_rr_file", "resample_tachogram", "segment_windows",
    "welch_psd", "window_count", "write_rr_file",
]
