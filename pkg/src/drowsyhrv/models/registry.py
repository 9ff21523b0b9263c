"""Algorithm ids, default hyperparameter grids, construction and JSON persistence."""
from __future__ import annotations

import json
from pathlib import Path

from .base import Classifier
from .gbt import LEAF_WISE, LEVEL_WISE, GbtConfig, GradientBoostedTrees
from .knn import KNNClassifier
from .scaling import MinMaxScaler, Scaled
from .svm import SVMClassifier

ALGORITHMS = ("svm", "knn", "xgb", "lgbm")

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "knn": {"k": [3, 5, 7, 9, 11]},
    "svm": {"C": [0.1, 1, 10, 100], "gamma": [0.01, 0.1, 1]},
    "xgb": {"n_trees": [50, 100, 200], "max_depth": [3, 5, 7], "learning_rate": [0.05, 0.1, 0.3]},
    "lgbm": {"n_trees": [50, 100, 200], "max_leaves": [15, 31, 63], "learning_rate": [0.05, 0.1, 0.3]},
}


def make_model(algorithm: str, params: dict | None = None, seed: int = 0) -> Classifier:
    """Unfitted model. SVM and KNN come wrapped in Min-Max normalization."""
    params = dict(params or {})
    if algorithm == "svm":
        return Scaled(SVMClassifier(**params))
    if algorithm == "knn":
        return Scaled(KNNClassifier(**params))
    if algorithm == "xgb":
        return GradientBoostedTrees(GbtConfig(growth=LEVEL_WISE, seed=seed, **params))
    if algorithm == "lgbm":
        params.setdefault("max_depth", -1)
        return GradientBoostedTrees(GbtConfig(growth=LEAF_WISE, seed=seed, **params))
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


def model_from_dict(d: dict) -> Classifier:
    kind = d["type"]
    if kind == "scaled":
        m = Scaled(model_from_dict(d["model"]))
        m.scaler = MinMaxScaler.from_dict(d["scaler"])
        m.n_features_ = m.inner.n_features_
        return m
    if kind == "svm":
        return SVMClassifier.from_dict(d)
    if kind == "knn":
        return KNNClassifier.from_dict(d)
    if kind == "gbt":
        return GradientBoostedTrees.from_dict(d)
    raise ValueError(f"unknown model type {kind!r}")


def save_model(path: str | Path, model: Classifier, feature_names=None) -> None:
    doc = {"algorithm": model.kind, "model": model.to_dict()}
    if feature_names is not None:
        doc["feature_names"] = list(feature_names)
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[Classifier, list[str] | None]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return model_from_dict(doc["model"]), doc.get("feature_names")
