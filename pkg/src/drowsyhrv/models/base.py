"""Common classifier contract.

Labels are 0 (awake) and 1 (drowsy). ``decision_function`` returns the real
value that Shapley explanations decompose; its meaning differs per family
(SVM margin, boosted log-odds, KNN drowsy vote fraction).
"""
from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..errors import NotFitted


def check_Xy(X, y=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if y is None:
        return X
    y = np.asarray(y).reshape(-1).astype(np.int64)
    if y.size != X.shape[0]:
        raise ValueError("X and y lengths differ")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0/1")
    return X, y


class Classifier(ABC):
    kind: str = ""

    def __init__(self):
        self.n_features_: int | None = None

    @abstractmethod
    def fit(self, X, y) -> Classifier: ...

    @abstractmethod
    def decision_function(self, X) -> np.ndarray: ...

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > self._threshold).astype(np.int64)

    # decision value above which the drowsy class is predicted
    _threshold = 0.0

    def _check_fitted(self, X) -> np.ndarray:
        if self.n_features_ is None:
            raise NotFitted(f"{type(self).__name__} is not fitted")
        X = check_Xy(X)
        if X.shape[1] != self.n_features_:
            raise ValueError(f"expected {self.n_features_} features, got {X.shape[1]}")
        return X

    @abstractmethod
    def params(self) -> dict: ...

    @abstractmethod
    def to_dict(self) -> dict: ...
