from __future__ import annotations

import numpy as np

from .base import Classifier, check_Xy


class MinMaxScaler:
    """Per-column (x - min) / (max - min) learned on training data.

    Constant columns map to 0. Values outside the training range are not
    clipped.
    """

    def __init__(self):
        self.min_: np.ndarray | None = None
        self.max_: np.ndarray | None = None

    def fit(self, X) -> MinMaxScaler:
        X = check_Xy(X)
        if X.shape[0] < 1:
            raise ValueError("need at least one row")
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        return self

    def transform(self, X) -> np.ndarray:
        X = check_Xy(X)
        span = self.max_ - self.min_
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (X - self.min_) / safe, 0.0)

    def fit_transform(self, X) -> np.ndarray:
        return self.fit(X).transform(X)

    def to_dict(self) -> dict:
        return {"min": self.min_.tolist(), "max": self.max_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> MinMaxScaler:
        s = cls()
        s.min_ = np.asarray(d["min"], dtype=np.float64)
        s.max_ = np.asarray(d["max"], dtype=np.float64)
        return s


def minmax_fit_transform(X) -> tuple[MinMaxScaler, np.ndarray]:
    scaler = MinMaxScaler()
    return scaler, scaler.fit_transform(X)


class Scaled(Classifier):
    """Min-Max normalization in front of a distance/kernel model."""

    def __init__(self, inner: Classifier):
        super().__init__()
        self.inner = inner
        self.kind = inner.kind
        self.scaler = MinMaxScaler()

    def fit(self, X, y) -> Scaled:
        X, y = check_Xy(X, y)
        self.inner.fit(self.scaler.fit_transform(X), y)
        self.n_features_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        return self.inner.decision_function(self.scaler.transform(self._check_fitted(X)))

    def predict(self, X) -> np.ndarray:
        return self.inner.predict(self.scaler.transform(self._check_fitted(X)))

    def params(self) -> dict:
        return self.inner.params()

    def to_dict(self) -> dict:
        return {"type": "scaled", "scaler": self.scaler.to_dict(), "model": self.inner.to_dict()}
