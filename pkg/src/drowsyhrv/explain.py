"""Kernel SHAP explanations, feature ranking and cross-model feature selection.

The explained quantity is the model's decision value: the SVM margin, the
boosted log-odds, or the KNN drowsy-vote fraction. Class labels are not
additive, so they are never explained directly.

A feature outside the coalition is imputed by averaging the model output over
the background rows, with coalition features taken from the instance.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .errors import BudgetTooSmall, TargetTooLarge

EXACT_MAX_FEATURES = 12
_ROWS_PER_CHUNK = 65536


@dataclass(frozen=True)
class ShapExplanation:
    phi: np.ndarray
    base_value: float
    model_output: float

    @property
    def local_accuracy_error(self) -> float:
        return abs(self.base_value + float(self.phi.sum()) - self.model_output)


@dataclass(frozen=True)
class FeatureRanking:
    names: tuple[str, ...]
    scores: tuple[float, ...]

    def __iter__(self):
        return iter(zip(self.names, self.scores))

    def __len__(self):
        return len(self.names)

    def top(self, k: int) -> list[str]:
        return list(self.names[:k])

    def to_dict(self) -> dict:
        return {"features": [{"name": n, "score": s} for n, s in self]}

    @classmethod
    def from_dict(cls, d: dict) -> FeatureRanking:
        feats = d["features"]
        return cls(tuple(f["name"] for f in feats), tuple(float(f["score"]) for f in feats))


class _CoalitionValue:
    """v(S) = mean over background of f(x_S, b_rest), evaluated in batches."""

    def __init__(self, model, instance: np.ndarray, background: np.ndarray):
        self.f = model.decision_function
        self.x = instance
        self.bg = background

    def __call__(self, masks: np.ndarray) -> np.ndarray:
        n_bg, m = self.bg.shape
        per_chunk = max(1, _ROWS_PER_CHUNK // n_bg)
        out = np.empty(masks.shape[0])
        for s in range(0, masks.shape[0], per_chunk):
            z = masks[s:s + per_chunk]
            rows = np.where(z[:, None, :], self.x[None, None, :], self.bg[None, :, :])
            out[s:s + per_chunk] = self.f(rows.reshape(-1, m)).reshape(z.shape[0], n_bg).mean(axis=1)
        return out


def _all_masks(m: int) -> np.ndarray:
    codes = np.arange(1 << m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(bool)


def _exact_shapley(values: np.ndarray, m: int) -> np.ndarray:
    """Shapley values from v tabulated over all 2^m bitmask-indexed coalitions."""
    codes = np.arange(1 << m, dtype=np.int64)
    sizes = np.array([bin(c).count("1") for c in range(1 << m)])
    weight = np.array([math.factorial(s) * math.factorial(m - s - 1) / math.factorial(m) for s in range(m)])
    phi = np.empty(m)
    for i in range(m):
        bit = 1 << i
        without = codes[(codes & bit) == 0]
        phi[i] = np.dot(weight[sizes[without]], values[without | bit] - values[without])
    return phi


def _kernel_coalitions(m: int, budget: int, rng: np.random.Generator):
    """Coalitions and regression weights: complete subset sizes are enumerated
    from the outside in while the budget covers them, the rest is sampled by
    kernel weight. Returns (masks, weights) excluding the empty and full sets."""
    n_sizes = (m - 1 + 1) // 2  # sizes 1..ceil((m-1)/2), each paired with m-s
    n_paired = (m - 1) // 2
    size_w = np.array([(m - 1) / (s * (m - s)) for s in range(1, n_sizes + 1)])
    size_w[:n_paired] *= 2
    size_w /= size_w.sum()

    masks, weights = [], []
    left = budget
    weight_left = 1.0
    remaining = size_w.copy()
    complete = 0
    for k in range(n_sizes):
        s = k + 1
        paired = k < n_paired
        n_subsets = math.comb(m, s) * (2 if paired else 1)
        if remaining[k] * left / n_subsets < 1 - 1e-8:
            break
        complete += 1
        left -= n_subsets
        w = size_w[k] / n_subsets
        for idx in combinations(range(m), s):
            z = np.zeros(m, dtype=bool)
            z[list(idx)] = True
            masks.append(z)
            weights.append(w)
            if paired:
                masks.append(~z)
                weights.append(w)
        weight_left -= size_w[k]
        if remaining[k + 1:].sum() > 0:
            remaining = remaining / (1 - remaining[k])
            remaining[: k + 1] = 0.0

    if complete < n_sizes and left > 0:
        probs = size_w.copy()
        probs[:complete] = 0.0
        probs /= probs.sum()
        found: dict[bytes, int] = {}
        sampled, counts = [], []
        attempts = 0
        while left > 0 and attempts < 50 * budget:
            attempts += 1
            k = int(rng.choice(n_sizes, p=probs))
            z = np.zeros(m, dtype=bool)
            z[rng.permutation(m)[: k + 1]] = True
            group = [z, ~z] if k < n_paired else [z]
            for g in group:
                key = g.tobytes()
                if key in found:
                    counts[found[key]] += 1
                elif left > 0:
                    found[key] = len(sampled)
                    sampled.append(g)
                    counts.append(1.0)
                    left -= 1
        counts = np.asarray(counts)
        masks.extend(sampled)
        weights.extend(counts / counts.sum() * weight_left)
    return np.array(masks, dtype=bool).reshape(-1, m), np.asarray(weights)


def _constrained_wls(masks, weights, values, base, fx) -> np.ndarray:
    """Weighted least squares with sum(phi) = fx - base, by eliminating the last phi."""
    total = fx - base
    z = masks.astype(np.float64)
    y = values - base - z[:, -1] * total
    A = z[:, :-1] - z[:, -1:]
    sw = np.sqrt(weights)
    head, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    return np.append(head, total - head.sum())


def kernel_shap_explain(
    model, instance, background, budget: int = 2048, method: str = "auto", seed: int = 0
) -> ShapExplanation:
    """Shapley values of ``model.decision_function`` at ``instance``.

    ``method="auto"`` enumerates every coalition when there are at most 12
    features and otherwise fits the Shapley-kernel regression on ``budget``
    coalitions. ``"exact"`` and ``"sampled"`` force either path.
    """
    x = np.asarray(instance, dtype=np.float64).reshape(-1)
    bg = np.asarray(background, dtype=np.float64)
    if bg.ndim != 2 or bg.shape[0] == 0:
        raise ValueError("background must be a non-empty 2-D array")
    if bg.shape[1] != x.size:
        raise ValueError("instance and background widths differ")
    if method not in ("auto", "exact", "sampled"):
        raise ValueError(f"unknown method {method!r}")
    m = x.size
    v = _CoalitionValue(model, x, bg)
    if m == 1:
        vals = v(np.array([[False], [True]]))
        return ShapExplanation(np.array([vals[1] - vals[0]]), float(vals[0]), float(vals[1]))

    if method == "exact" or (method == "auto" and m <= EXACT_MAX_FEATURES):
        vals = v(_all_masks(m))
        return ShapExplanation(_exact_shapley(vals, m), float(vals[0]), float(vals[-1]))

    if budget < m + 2:
        raise BudgetTooSmall(f"budget {budget} is below {m + 2} coalitions for {m} features")
    ends = v(np.array([np.zeros(m, bool), np.ones(m, bool)]))
    base, fx = float(ends[0]), float(ends[1])
    masks, weights = _kernel_coalitions(m, budget, np.random.default_rng(seed))
    phi = _constrained_wls(masks, weights, v(masks), base, fx)
    return ShapExplanation(phi, base, fx)


def shap_matrix(
    model, X, background, budget: int = 2048, method: str = "auto", seed: int = 0, n_jobs: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Per-row phi matrix and base values for every row of ``X``.

    Row ``r`` uses its own coalition stream seeded by ``(seed, r)``.
    """
    X = np.asarray(X, dtype=np.float64)
    seeds = [int(np.random.SeedSequence([seed, r]).generate_state(1)[0]) for r in range(X.shape[0])]
    job = delayed(kernel_shap_explain)
    if n_jobs == 1:
        exps = [kernel_shap_explain(model, X[r], background, budget, method, seeds[r]) for r in range(X.shape[0])]
    else:
        exps = Parallel(n_jobs=n_jobs)(job(model, X[r], background, budget, method, seeds[r]) for r in range(X.shape[0]))
    phi = np.array([e.phi for e in exps]).reshape(X.shape[0], X.shape[1])
    return phi, np.array([e.base_value for e in exps])


def ranking_from_phi(phi: np.ndarray, names) -> FeatureRanking:
    """Mean |phi| per feature, descending, ties broken by name."""
    phi = np.asarray(phi, dtype=np.float64)
    names = list(names)
    if phi.ndim != 2 or phi.shape[0] == 0:
        raise ValueError("need at least one explained row")
    if phi.shape[1] != len(names):
        raise ValueError("phi width does not match feature names")
    scores = np.abs(phi).mean(axis=0)
    order = sorted(range(len(names)), key=lambda j: (-scores[j], names[j]))
    return FeatureRanking(tuple(names[j] for j in order), tuple(float(scores[j]) for j in order))


def rank_features(model, eval_X, background, budget: int = 2048, names=None, seed: int = 0, n_jobs: int = 1):
    eval_X = np.asarray(eval_X, dtype=np.float64)
    if eval_X.ndim != 2 or eval_X.shape[0] == 0:
        raise ValueError("evaluation set is empty")
    names = names if names is not None else [f"x{j}" for j in range(eval_X.shape[1])]
    phi, _ = shap_matrix(model, eval_X, background, budget, seed=seed, n_jobs=n_jobs)
    return ranking_from_phi(phi, names)


def select_features(rankings, target: int) -> list[str]:
    """Round-robin union: each ranking in turn contributes its best unseen feature."""
    rankings = list(rankings)
    if not rankings:
        raise ValueError("need at least one ranking")
    universe = {n for r in rankings for n in r.names}
    if target > len(universe):
        raise TargetTooLarge(f"target {target} exceeds the {len(universe)} ranked features")
    if target < 1:
        raise ValueError("target must be positive")
    chosen: list[str] = []
    seen: set[str] = set()
    cursors = [0] * len(rankings)
    while len(chosen) < target:
        for r, ranking in enumerate(rankings):
            names = ranking.names
            while cursors[r] < len(names) and names[cursors[r]] in seen:
                cursors[r] += 1
            if cursors[r] < len(names):
                chosen.append(names[cursors[r]])
                seen.add(names[cursors[r]])
            if len(chosen) == target:
                break
    return chosen


def sample_background(X, n: int = 50, seed: int = 0) -> np.ndarray:
    """Seeded row sample without replacement (all rows when ``n`` exceeds them)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] <= n:
        return X.copy()
    rows = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=n, replace=False))
    return X[rows]


def save_ranking(path: str | Path, ranking: FeatureRanking) -> None:
    Path(path).write_text(json.dumps(ranking.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_ranking(path: str | Path) -> FeatureRanking:
    return FeatureRanking.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_selection(path: str | Path, features, sources=()) -> None:
    doc = {"features": list(features), "sources": list(sources)}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_selection(path: str | Path) -> list[str]:
    return list(json.loads(Path(path).read_text(encoding="utf-8"))["features"])


def save_phi_csv(path: str | Path, phi: np.ndarray, base_values: np.ndarray, names) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "base_value", *names])
        for r, (b, row) in enumerate(zip(base_values, phi)):
            w.writerow([r, repr(float(b)), *(repr(float(v)) for v in row)])
