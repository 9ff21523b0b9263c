from __future__ import annotations

import numpy as np

from ..errors import KTooLarge
from .base import Classifier, check_Xy

_CHUNK = 2048


def _nearest(train: np.ndarray, query: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest training rows per query, nearest first.

    Equal distances resolve to the lower training index.
    """
    sq_train = np.einsum("ij,ij->i", train, train)
    out = np.empty((query.shape[0], k), dtype=np.int64)
    for start in range(0, query.shape[0], _CHUNK):
        q = query[start:start + _CHUNK]
        d2 = sq_train[None, :] - 2.0 * q @ train.T + np.einsum("ij,ij->i", q, q)[:, None]
        np.maximum(d2, 0.0, out=d2)
        out[start:start + q.shape[0]] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


class KNNClassifier(Classifier):
    """Euclidean k-nearest-neighbour plurality vote.

    An even split of the vote goes to the label of the single nearest
    neighbour. The decision value is the fraction of drowsy votes.
    """

    kind = "knn"

    def __init__(self, k: int = 5):
        super().__init__()
        self.k = int(k)

    def fit(self, X, y) -> KNNClassifier:
        X, y = check_Xy(X, y)
        if self.k < 1 or self.k > X.shape[0]:
            raise KTooLarge(f"k={self.k} with {X.shape[0]} training rows")
        self.X_, self.y_ = X.copy(), y.copy()
        self.n_features_ = X.shape[1]
        return self

    def _votes(self, X):
        nn = _nearest(self.X_, self._check_fitted(X), self.k)
        labels = self.y_[nn]
        return labels.sum(axis=1), labels[:, 0]

    def decision_function(self, X) -> np.ndarray:
        drowsy, _ = self._votes(X)
        return drowsy / self.k

    def predict(self, X) -> np.ndarray:
        drowsy, nearest = self._votes(X)
        twice = 2 * drowsy
        return np.where(twice > self.k, 1, np.where(twice < self.k, 0, nearest)).astype(np.int64)

    def params(self) -> dict:
        return {"k": self.k}

    def to_dict(self) -> dict:
        return {"type": "knn", "k": self.k, "X": self.X_.tolist(), "y": self.y_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> KNNClassifier:
        return cls(d["k"]).fit(np.asarray(d["X"]), np.asarray(d["y"]))


def knn_fit_predict(train_X, train_y, k: int, query) -> np.ndarray:
    return KNNClassifier(k).fit(train_X, train_y).predict(query)
