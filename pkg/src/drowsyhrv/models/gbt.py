"""Histogram gradient-boosted decision trees under logistic loss.

Two growth policies are supported:

* ``level_wise_histogram``: every node of a depth is split before the next
  depth is considered (XGBoost ``hist`` style).
* ``leaf_wise_goss``: the leaf with the largest gain is split next until
  ``max_leaves`` is reached, and each round trains on a gradient-based
  one-side sample of the rows (LightGBM style).
"""
from __future__ import annotations

import heapq
from dataclasses import asdict, dataclass

import numpy as np

from .base import Classifier, check_Xy

LEVEL_WISE = "level_wise_histogram"
LEAF_WISE = "leaf_wise_goss"
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class GbtConfig:
    growth: str = LEVEL_WISE
    n_trees: int = 100
    max_depth: int = 5  # <= 0 means unlimited (leaf-wise only)
    max_leaves: int = 31
    learning_rate: float = 0.1
    l2_lambda: float = 1.0
    histogram_bins: int = 64
    goss_top_frac: float = 0.2
    goss_rand_frac: float = 0.1
    goss: bool = True
    min_child_weight: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.growth not in (LEVEL_WISE, LEAF_WISE):
            raise ValueError(f"unknown growth policy {self.growth!r}")
        if self.histogram_bins < 2:
            raise ValueError("histogram_bins must be >= 2")
        a, b = self.goss_top_frac, self.goss_rand_frac
        if not (0 <= a <= 1 and 0 <= b <= 1 and a + b <= 1):
            raise ValueError("GOSS fractions need 0 <= a, b and a + b <= 1")
        if self.growth == LEVEL_WISE and self.max_depth < 1:
            raise ValueError("level-wise growth needs max_depth >= 1")
        if self.max_leaves < 2:
            raise ValueError("max_leaves must be >= 2")
        if self.n_trees < 0 or self.learning_rate < 0 or self.l2_lambda < 0:
            raise ValueError("n_trees, learning_rate and l2_lambda must be non-negative")


def bin_edges(column: np.ndarray, n_bins: int) -> np.ndarray:
    """Split thresholds for one feature: midpoints between distinct values when
    there are few of them, otherwise interior training quantiles."""
    u = np.unique(column)
    if u.size <= n_bins:
        return (u[:-1] + u[1:]) / 2
    qs = np.quantile(column, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    return np.unique(qs)


class Tree:
    """Flat node arrays. Leaves have ``left == right == -1``."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.left < 0))

    def depth(self) -> int:
        depth = np.zeros(self.left.size, dtype=np.int64)
        for i in range(self.left.size):
            if self.left[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.left[node] >= 0
        while np.any(active):
            rows = np.flatnonzero(active)
            n = node[rows]
            go_left = X[rows, self.feature[n]] <= self.threshold[n]
            node[rows] = np.where(go_left, self.left[n], self.right[n])
            active = self.left[node] >= 0
        return self.value[node]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in self.__slots__}

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(**{k: d[k] for k in cls.__slots__})


class _Builder:
    def __init__(self, codes, binned, edges, n_bins, g, h, cfg: GbtConfig):
        self.codes, self.binned, self.edges = codes, binned, edges
        self.F = binned.shape[1]
        self.B = n_bins
        self.g, self.h, self.cfg = g, h, cfg
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        self.depth = []

    def new_node(self, rows, depth):
        G, H = self.g[rows].sum(), self.h[rows].sum()
        self.feature.append(0)
        self.threshold.append(np.inf)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(-G / (H + self.cfg.l2_lambda) * self.cfg.learning_rate)
        self.depth.append(depth)
        return len(self.value) - 1

    def best_split(self, rows):
        """(gain, feature, bin) of the best split of ``rows``, or None."""
        F, B, lam, mcw = self.F, self.B, self.cfg.l2_lambda, self.cfg.min_child_weight
        codes = self.codes[rows].ravel()
        size = F * B
        gh = np.bincount(codes, weights=np.repeat(self.g[rows], F), minlength=size).reshape(F, B)
        hh = np.bincount(codes, weights=np.repeat(self.h[rows], F), minlength=size).reshape(F, B)
        ch = np.bincount(codes, minlength=size).reshape(F, B)
        G, H, N = self.g[rows].sum(), self.h[rows].sum(), rows.size
        GL = np.cumsum(gh, axis=1)[:, :-1]
        HL = np.cumsum(hh, axis=1)[:, :-1]
        CL = np.cumsum(ch, axis=1)[:, :-1]
        GR, HR, CR = G - GL, H - HL, N - CL
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - G * G / (H + lam))
        ok = (HL >= mcw) & (HR >= mcw) & (CL >= 1) & (CR >= 1) & np.isfinite(gain)
        gain = np.where(ok, gain, -np.inf)
        flat = int(np.argmax(gain))
        best = gain.flat[flat]
        if not best > _MIN_GAIN:
            return None
        f, b = divmod(flat, B - 1)
        return float(best), f, b

    def split(self, node, rows, f, b):
        mask = self.binned[rows, f] <= b
        lrows, rrows = rows[mask], rows[~mask]
        d = self.depth[node] + 1
        left, right = self.new_node(lrows, d), self.new_node(rrows, d)
        self.feature[node] = f
        self.threshold[node] = float(self.edges[f][b])
        self.left[node], self.right[node] = left, right
        return (left, lrows), (right, rrows)

    def grow_level_wise(self, rows):
        frontier = [(self.new_node(rows, 0), rows)]
        for _ in range(self.cfg.max_depth):
            nxt = []
            for node, r in frontier:
                s = self.best_split(r)
                if s is not None:
                    nxt.extend(self.split(node, r, s[1], s[2]))
            if not nxt:
                break
            frontier = nxt

    def grow_leaf_wise(self, rows):
        max_depth = self.cfg.max_depth if self.cfg.max_depth > 0 else np.inf
        heap = []

        def push(node, r):
            if self.depth[node] >= max_depth:
                return
            s = self.best_split(r)
            if s is not None:
                heapq.heappush(heap, (-s[0], node, s[1], s[2], r))

        push(self.new_node(rows, 0), rows)
        n_leaves = 1
        while heap and n_leaves < self.cfg.max_leaves:
            _, node, f, b, r = heapq.heappop(heap)
            for child, crows in self.split(node, r, f, b):
                push(child, crows)
            n_leaves += 1

    def tree(self) -> Tree:
        return Tree(self.feature, self.threshold, self.left, self.right, self.value)


def logistic_loss(y: np.ndarray, margin: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


class GradientBoostedTrees(Classifier):
    """Binary boosted trees; the decision value is the log-odds margin."""

    def __init__(self, config: GbtConfig = GbtConfig()):
        super().__init__()
        self.config = config
        self.kind = "xgb" if config.growth == LEVEL_WISE else "lgbm"

    def _bin(self, X):
        cfg = self.config
        self.edges_ = [bin_edges(X[:, f], cfg.histogram_bins) for f in range(X.shape[1])]
        binned = np.column_stack([np.searchsorted(e, X[:, f], side="left") for f, e in enumerate(self.edges_)])
        n_bins = max(e.size for e in self.edges_) + 1
        codes = binned + (np.arange(X.shape[1]) * n_bins)[None, :]
        return binned, codes, n_bins

    def _goss_rows(self, g, rng):
        cfg = self.config
        n = g.size
        all_rows = np.arange(n)
        if cfg.growth != LEAF_WISE or not cfg.goss:
            return all_rows, None
        top_n, rand_n = int(cfg.goss_top_frac * n), int(cfg.goss_rand_frac * n)
        if top_n + rand_n >= n:
            return all_rows, None
        order = np.argsort(-np.abs(g), kind="stable")
        top, rest = order[:top_n], order[top_n:]
        sampled = rng.choice(rest, size=rand_n, replace=False) if rand_n else rest[:0]
        weight = np.ones(n)
        if rand_n:
            weight[sampled] = (1.0 - cfg.goss_top_frac) / cfg.goss_rand_frac
        return np.sort(np.concatenate([top, sampled])), weight

    def fit(self, X, y) -> GradientBoostedTrees:
        X, y = check_Xy(X, y)
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        binned, codes, n_bins = self._bin(X)
        p = float(np.clip(y.mean(), 1e-6, 1 - 1e-6))
        self.base_score_ = float(np.log(p / (1 - p)))
        margin = np.full(y.size, self.base_score_)
        self.trees_: list[Tree] = []
        self.train_loss_ = [logistic_loss(y, margin)]
        for _ in range(cfg.n_trees):
            prob = 1.0 / (1.0 + np.exp(-margin))
            g = prob - y
            h = prob * (1.0 - prob)
            rows, weight = self._goss_rows(g, rng)
            if weight is not None:
                g, h = g * weight, h * weight
            builder = _Builder(codes, binned, self.edges_, n_bins, g, h, cfg)
            if cfg.growth == LEVEL_WISE:
                builder.grow_level_wise(rows)
            else:
                builder.grow_leaf_wise(rows)
            tree = builder.tree()
            self.trees_.append(tree)
            margin = margin + tree.predict(X)
            self.train_loss_.append(logistic_loss(y, margin))
        self.n_features_ = X.shape[1]
        self._compile()
        return self

    def _compile(self):
        sizes = [t.value.size for t in self.trees_]
        offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self._roots = offsets[:-1]
        if not self.trees_:
            self._depth = 0
            return
        feat, thr, left, right, val = [], [], [], [], []
        for off, t in zip(offsets, self.trees_):
            leaf = t.left < 0
            idx = np.arange(t.value.size) + off
            feat.append(np.where(leaf, 0, t.feature))
            thr.append(np.where(leaf, np.inf, t.threshold))
            left.append(np.where(leaf, idx, t.left + off))
            right.append(np.where(leaf, idx, t.right + off))
            val.append(t.value)
        self._feat, self._thr = np.concatenate(feat), np.concatenate(thr)
        self._left, self._right = np.concatenate(left), np.concatenate(right)
        self._val = np.concatenate(val)
        self._depth = max(t.depth() for t in self.trees_)

    def decision_function(self, X) -> np.ndarray:
        X = self._check_fitted(X)
        out = np.full(X.shape[0], self.base_score_)
        if not self.trees_:
            return out
        for s in range(0, X.shape[0], 8192):
            xb = X[s:s + 8192]
            node = np.broadcast_to(self._roots, (xb.shape[0], self._roots.size)).copy()
            for _ in range(self._depth):
                x = np.take_along_axis(xb, self._feat[node], axis=1)
                node = np.where(x <= self._thr[node], self._left[node], self._right[node])
            out[s:s + 8192] += self._val[node].sum(axis=1)
        return out

    def params(self) -> dict:
        c = self.config
        keys = ("n_trees", "learning_rate") + (("max_depth",) if c.growth == LEVEL_WISE else ("max_leaves",))
        return {k: getattr(c, k) for k in keys}

    def to_dict(self) -> dict:
        return {
            "type": "gbt", "config": asdict(self.config), "n_features": self.n_features_,
            "base_score": self.base_score_, "trees": [t.to_dict() for t in self.trees_],
        }

    @classmethod
    def from_dict(cls, d: dict) -> GradientBoostedTrees:
        m = cls(GbtConfig(**d["config"]))
        m.base_score_ = float(d["base_score"])
        m.trees_ = [Tree.from_dict(t) for t in d["trees"]]
        m.n_features_ = int(d["n_features"])
        m._compile()
        return m


def gbt_fit(X, y, config: GbtConfig = GbtConfig()) -> GradientBoostedTrees:
    return GradientBoostedTrees(config).fit(X, y)
