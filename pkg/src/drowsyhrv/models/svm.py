"""Soft-margin RBF support vector machine trained by SMO.

Working pairs are chosen with the second-order rule of Fan, Chen and Lin
(2005): the maximal violator ``i`` and the partner ``j`` giving the largest
decrease of the dual objective.
"""
from __future__ import annotations

import numpy as np

from ..errors import NoConvergence
from .base import Classifier, check_Xy

_TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.einsum("ij,ij->i", A, A)[:, None]
        + np.einsum("ij,ij->i", B, B)[None, :]
        - 2.0 * A @ B.T
    )
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo(K: np.ndarray, y: np.ndarray, C: float, tol: float = 1e-3, max_iter: int = 200_000):
    """Solve min 1/2 a'Qa - e'a s.t. y'a = 0, 0 <= a <= C with Q = yy'K.

    ``y`` is in {-1, +1}. Returns ``(alpha, b, n_iter)``. Stops when the
    maximal KKT violation ``m - M`` drops below ``tol``.
    """
    n = y.size
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of the dual objective, Q a - e
    diag = np.diag(K).copy()
    pos = y > 0
    for it in range(max_iter):
        at_lower = alpha <= 0.0
        at_upper = alpha >= C
        up = (pos & ~at_upper) | (~pos & ~at_lower)
        low = (pos & ~at_lower) | (~pos & ~at_upper)
        v = -y * grad
        v_up = np.where(up, v, -np.inf)
        i = int(np.argmax(v_up))
        m = v_up[i]
        M = np.min(np.where(low, v, np.inf))
        if m - M < tol:
            return alpha, _bias(alpha, grad, y, C, m, M), it
        b_ij = m - v
        cand = low & (b_ij > 0)
        a_ij = diag[i] + diag - 2.0 * K[i]
        a_ij = np.where(a_ij > 0, a_ij, _TAU)
        score = np.where(cand, -(b_ij * b_ij) / a_ij, np.inf)
        j = int(np.argmin(score))
        # move along d_i = y_i, d_j = -y_j, which keeps y'a fixed
        step = b_ij[j] / a_ij[j]
        room_i = C - alpha[i] if y[i] > 0 else alpha[i]
        room_j = alpha[j] if y[j] > 0 else C - alpha[j]
        step = min(step, room_i, room_j)
        alpha[i] += y[i] * step
        alpha[j] -= y[j] * step
        # snap to the box to keep the index sets exact
        for t in (i, j):
            if alpha[t] < 1e-12 * C:
                alpha[t] = 0.0
            elif alpha[t] > C * (1 - 1e-12):
                alpha[t] = C
        grad += step * y * (K[:, i] - K[:, j])
    raise NoConvergence(f"SMO did not reach tolerance {tol} in {max_iter} iterations")


def _bias(alpha, grad, y, C, m, M):
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return float(np.mean(-y[free] * grad[free]))
    return float((m + M) / 2)


def kkt_residuals(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, b: float, C: float) -> np.ndarray:
    """Per-sample violation of the KKT conditions (0 when satisfied)."""
    margin = y * (K @ (alpha * y) + b) - 1.0
    res = np.zeros_like(margin)
    zero = alpha <= 0
    bound = alpha >= C
    free = ~zero & ~bound
    res[zero] = np.maximum(0.0, -margin[zero])
    res[bound] = np.maximum(0.0, margin[bound])
    res[free] = np.abs(margin[free])
    return res


class SVMClassifier(Classifier):
    kind = "svm"

    def __init__(self, C: float = 1.0, gamma: float = 0.1, tol: float = 1e-3, max_iter: int = 200_000):
        super().__init__()
        self.C = float(C)
        self.gamma = float(gamma)
        self.tol = float(tol)
        self.max_iter = int(max_iter)

    def fit(self, X, y) -> SVMClassifier:
        X, y = check_Xy(X, y)
        if np.unique(y).size < 2:
            raise ValueError("SVM needs both classes")
        ys = np.where(y == 1, 1.0, -1.0)
        K = rbf_kernel(X, X, self.gamma)
        alpha, b, self.n_iter_ = smo(K, ys, self.C, self.tol, self.max_iter)
        sv = alpha > 0
        self.support_vectors_ = X[sv].copy()
        self.dual_coef_ = (alpha * ys)[sv]
        self.intercept_ = b
        self.n_features_ = X.shape[1]
        self._train = (X, ys, alpha)
        return self

    def kkt_residuals(self) -> np.ndarray:
        X, ys, alpha = self._train
        return kkt_residuals(rbf_kernel(X, X, self.gamma), ys, alpha, self.intercept_, self.C)

    def decision_function(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        if self.dual_coef_.size == 0:
            return np.full(X.shape[0], self.intercept_)
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], 4096):
            K = rbf_kernel(X[s:s + 4096], self.support_vectors_, self.gamma)
            out[s:s + 4096] = K @ self.dual_coef_ + self.intercept_
        return out

    def params(self) -> dict:
        return {"C": self.C, "gamma": self.gamma}

    def to_dict(self) -> dict:
        return {
            "type": "svm", "C": self.C, "gamma": self.gamma, "tol": self.tol,
            "n_features": self.n_features_,
            "support_vectors": self.support_vectors_.tolist(),
            "dual_coef": self.dual_coef_.tolist(), "intercept": self.intercept_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> SVMClassifier:
        m = cls(d["C"], d["gamma"], d.get("tol", 1e-3))
        m.support_vectors_ = np.asarray(d["support_vectors"], dtype=np.float64).reshape(-1, d["n_features"])
        m.dual_coef_ = np.asarray(d["dual_coef"], dtype=np.float64)
        m.intercept_ = float(d["intercept"])
        m.n_features_ = m.support_vectors_.shape[1]
        return m
