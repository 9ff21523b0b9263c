"""The 31-feature HRV vector and its fixed column order."""
from __future__ import annotations

from collections.abc import Mapping
from typing import Iterator

import numpy as np

from ..errors import DegenerateGeometry, FeatureError
from .nonlinear import NONLINEAR_FEATURES, compute_dfa_alpha1, compute_poincare
from .series import RRSeries
from .spectral import FREQUENCY_FEATURES, SpectralConfig, compute_frequency_features
from .time_domain import TIME_FEATURES, compute_time_features

#: Column order used by every persisted feature table. Time, then frequency,
#: then nonlinear features.
FEATURE_NAMES: tuple[str, ...] = TIME_FEATURES + FREQUENCY_FEATURES + NONLINEAR_FEATURES

FEATURE_DOMAINS: dict[str, str] = {
    **{n: "time" for n in TIME_FEATURES},
    **{n: "frequency" for n in FREQUENCY_FEATURES},
    **{n: "nonlinear" for n in NONLINEAR_FEATURES},
}

assert len(FEATURE_NAMES) == 31


class HrvFeatureVector(Mapping):
    """Read-only mapping of the 31 features of one window, in ``FEATURE_NAMES`` order."""

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[str, float] | np.ndarray):
        if isinstance(values, Mapping):
            missing = set(FEATURE_NAMES) - set(values)
            extra = set(values) - set(FEATURE_NAMES)
            if missing or extra:
                raise ValueError(f"bad feature keys: missing={sorted(missing)} extra={sorted(extra)}")
            arr = np.array([float(values[n]) for n in FEATURE_NAMES])
        else:
            arr = np.array(values, dtype=np.float64).reshape(-1)
            if arr.size != len(FEATURE_NAMES):
                raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {arr.size}")
        arr.setflags(write=False)
        self._values = arr

    def __getitem__(self, key: str) -> float:
        try:
            return float(self._values[FEATURE_NAMES.index(key)])
        except ValueError:
            raise KeyError(key) from None

    def __iter__(self) -> Iterator[str]:
        return iter(FEATURE_NAMES)

    def __len__(self) -> int:
        return len(FEATURE_NAMES)

    def as_array(self) -> np.ndarray:
        return self._values

    def domain(self, name: str) -> str:
        return FEATURE_DOMAINS[name]

    def __repr__(self) -> str:
        return f"HrvFeatureVector({dict(self)!r})"


def compute_feature_vector(window: RRSeries, config: SpectralConfig = SpectralConfig()) -> HrvFeatureVector:
    """Compute all 31 features; a failure is re-raised with ``err.group`` set."""
    values: dict[str, float] = {}
    try:
        values.update(compute_time_features(window))
    except FeatureError as err:
        err.group = "time"
        raise
    try:
        values.update(compute_frequency_features(window, config))
    except FeatureError as err:
        err.group = "frequency"
        raise
    try:
        values["dfa_alpha1"] = compute_dfa_alpha1(window)
        sd1, sd2, ratio = compute_poincare(window)
        if ratio is None:
            raise DegenerateGeometry("sd1 is zero; SD2/SD1 ratio undefined")
        values.update(sd1=sd1, sd2=sd2, sd2_sd1_ratio=ratio)
    except FeatureError as err:
        err.group = "nonlinear"
        raise
    return HrvFeatureVector(values)
