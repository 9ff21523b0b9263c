"""Confusion-matrix metrics with drowsy (1) as the positive class.

Precision, recall and F1 with a zero denominator are defined as 0 so the
macro average is always defined.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

CLASS_NAMES = ("awake", "drowsy")


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 2 * precision * recall / s if s else 0.0


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: tuple[float, float]
    recall: tuple[float, float]
    f1: tuple[float, float]
    macro_f1: float
    confusion: tuple[int, int, int, int]  # tp, tn, fp, fn for drowsy

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("precision", "recall", "f1", "confusion"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Metrics:
        return cls(
            d["accuracy"], tuple(d["precision"]), tuple(d["recall"]), tuple(d["f1"]),
            d["macro_f1"], tuple(d["confusion"]),
        )


def metrics_from_predictions(y_true, y_pred) -> Metrics:
    t = np.asarray(y_true).astype(np.int64).reshape(-1)
    p = np.asarray(y_pred).astype(np.int64).reshape(-1)
    if t.size != p.size:
        raise ValueError("y_true and y_pred lengths differ")
    tp = int(np.sum((t == 1) & (p == 1)))
    tn = int(np.sum((t == 0) & (p == 0)))
    fp = int(np.sum((t == 0) & (p == 1)))
    fn = int(np.sum((t == 1) & (p == 0)))
    # awake's true positives are drowsy's true negatives
    prec = (_ratio(tn, tn + fn), _ratio(tp, tp + fp))
    rec = (_ratio(tn, tn + fp), _ratio(tp, tp + fn))
    f1 = (f1_score(prec[0], rec[0]), f1_score(prec[1], rec[1]))
    return Metrics(
        accuracy=_ratio(tp + tn, t.size),
        precision=prec, recall=rec, f1=f1,
        macro_f1=(f1[0] + f1[1]) / 2,
        confusion=(tp, tn, fp, fn),
    )


def evaluate(model, X, y) -> Metrics:
    return metrics_from_predictions(y, model.predict(X))


def save_predictions(path: str | Path, y_true, y_pred, row_ids=None) -> None:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    ids = np.arange(y_true.size) if row_ids is None else np.asarray(row_ids)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row_id", "true", "predicted"])
        for i, t, p in zip(ids, y_true, y_pred):
            w.writerow([int(i), int(t), int(p)])


def load_predictions(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    ids = np.array([int(r["row_id"]) for r in rows], dtype=np.int64)
    return ids, np.array([int(r["true"]) for r in rows]), np.array([int(r["predicted"]) for r in rows])
