"""Labeled feature table with per-row provenance, and its CSV form."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyDataset, FeatureError
from ..hrv import FEATURE_NAMES, RRSeries, SpectralConfig, WindowSpec, compute_feature_vector, segment_windows
from .labeling import SessionLabel

log = logging.getLogger(__name__)

PROVENANCE = ("subject_id", "session_index", "window_index", "window_size", "diff_count", "augmented")


@dataclass
class LabeledDataset:
    """Feature matrix ``X`` (rows x features), labels ``y`` (drowsy = 1) and provenance.

    ``diff_count`` is the number of successive RR differences in the source
    window. It is not a model input; the adversarial constraint rules need it
    to keep pNNxx consistent with NNxx.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    subject_id: np.ndarray = None
    session_index: np.ndarray = None
    window_index: np.ndarray = None
    window_size: np.ndarray = None
    diff_count: np.ndarray = None
    augmented: np.ndarray = None
    dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise ValueError("X must be 2-D")
        n = self.X.shape[0]
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        self.feature_names = tuple(self.feature_names)
        if self.X.shape[1] != len(self.feature_names):
            raise ValueError("feature_names does not match X")
        if self.y.size != n:
            raise ValueError("y length does not match X")
        if not np.all(np.isin(self.y, (0, 1))):
            raise ValueError("labels must be 0 (awake) or 1 (drowsy)")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("feature matrix contains undefined values")
        defaults = {
            "subject_id": np.array([""] * n, dtype=object),
            "session_index": np.zeros(n, dtype=np.int64),
            "window_index": np.arange(n, dtype=np.int64),
            "window_size": np.zeros(n, dtype=np.int64),
            "diff_count": np.zeros(n, dtype=np.int64),
            "augmented": np.zeros(n, dtype=bool),
        }
        for name, default in defaults.items():
            value = getattr(self, name)
            arr = default if value is None else np.asarray(value, dtype=default.dtype).reshape(-1)
            if arr.size != n:
                raise ValueError(f"{name} length does not match X")
            setattr(self, name, arr)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def class_counts(self) -> dict[SessionLabel, int]:
        return {lab: int(np.count_nonzero(self.y == lab)) for lab in SessionLabel}

    def _provenance(self) -> dict:
        return {name: getattr(self, name) for name in PROVENANCE}

    def subset(self, rows: Sequence[int] | np.ndarray) -> LabeledDataset:
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(
            self.X[rows], self.y[rows], self.feature_names,
            **{k: v[rows] for k, v in self._provenance().items()},
        )

    def with_features(self, names: Sequence[str]) -> LabeledDataset:
        """Column subset in the given order."""
        idx = [self.feature_names.index(n) for n in names]
        return LabeledDataset(self.X[:, idx], self.y, tuple(names), **self._provenance())

    def with_labels(self, y) -> LabeledDataset:
        return LabeledDataset(self.X, y, self.feature_names, **self._provenance())

    def replace_X(self, X: np.ndarray) -> LabeledDataset:
        return LabeledDataset(X, self.y, self.feature_names, **self._provenance())

    def concat(self, other: LabeledDataset) -> LabeledDataset:
        if other.feature_names != self.feature_names:
            raise ValueError("cannot concatenate datasets with different features")
        a, b = self._provenance(), other._provenance()
        return LabeledDataset(
            np.vstack([self.X, other.X]), np.concatenate([self.y, other.y]), self.feature_names,
            **{k: np.concatenate([a[k], b[k]]) for k in PROVENANCE},
        )

    def provenance_keys(self) -> list[tuple[str, int, int]]:
        return list(zip(self.subject_id.tolist(), self.session_index.tolist(), self.window_index.tolist()))

    # -- persistence ---------------------------------------------------------

    def to_csv(self, path: str | Path, with_label: bool = True) -> None:
        """Feature columns, the label (unless ``with_label`` is false), then provenance."""
        label = ["label"] if with_label else []
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(list(self.feature_names) + label + list(PROVENANCE))
            for i in range(len(self)):
                w.writerow(
                    [repr(float(v)) for v in self.X[i]]
                    + [int(self.y[i])] * with_label
                    + [self.subject_id[i], int(self.session_index[i]),
                       int(self.window_index[i]), int(self.window_size[i]),
                       int(self.diff_count[i]), int(self.augmented[i])]
                )

    @classmethod
    def from_csv(cls, path: str | Path) -> LabeledDataset:
        """Read a table written by ``to_csv``; an unlabeled table reads back as all awake."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows:
            raise EmptyDataset(f"{path} is empty")
        header, body = rows[0], rows[1:]
        labeled = "label" in header
        n_feat = header.index("label" if labeled else "subject_id")
        names = tuple(header[:n_feat])
        cols = {name: header.index(name) for name in PROVENANCE}
        X = np.array([[float(v) for v in r[:n_feat]] for r in body]).reshape(len(body), n_feat)
        return cls(
            X,
            np.array([int(r[n_feat]) if labeled else 0 for r in body], dtype=np.int64),
            names,
            subject_id=np.array([r[cols["subject_id"]] for r in body], dtype=object),
            session_index=[int(r[cols["session_index"]]) for r in body],
            window_index=[int(r[cols["window_index"]]) for r in body],
            window_size=[int(r[cols["window_size"]]) for r in body],
            diff_count=[int(r[cols["diff_count"]]) for r in body],
            augmented=[bool(int(r[cols["augmented"]])) for r in body],
        )


@dataclass(frozen=True)
class SessionRecording:
    """One subject-session: its RR series, length and label."""

    subject_id: str
    session_index: int
    series: RRSeries
    session_length_s: float
    label: SessionLabel


def build_dataset(
    sessions: Sequence[SessionRecording],
    spec: WindowSpec,
    config: SpectralConfig = SpectralConfig(),
) -> LabeledDataset:
    """Window every session and compute features; windows with undefined features are dropped."""
    rows, labels, prov = [], [], []
    dropped = 0
    for rec in sessions:
        windows = segment_windows(rec.series, rec.session_length_s, spec)
        kept = 0
        for k, win in enumerate(windows):
            try:
                vec = compute_feature_vector(win, config)
            except FeatureError as err:
                dropped += 1
                log.info("dropped window %s/%s/%d (%s: %s)", rec.subject_id, rec.session_index, k, err.group, err)
                continue
            rows.append(vec.as_array())
            labels.append(int(rec.label))
            prov.append((rec.subject_id, rec.session_index, k, spec.window_size_s, len(win) - 1))
            kept += 1
        if not kept:
            log.warning("session %s/%s produced no valid %ss window", rec.subject_id, rec.session_index, spec.window_size_s)
    if dropped:
        log.warning("dropped %d window(s) with undefined features at %ds", dropped, spec.window_size_s)
    if not rows:
        raise EmptyDataset(f"no valid windows at window size {spec.window_size_s}s")
    subj, sess, widx, wsize, dcount = zip(*prov)
    ds = LabeledDataset(
        np.vstack(rows), np.array(labels), FEATURE_NAMES,
        subject_id=np.array(subj, dtype=object), session_index=sess, window_index=widx,
        window_size=wsize, diff_count=dcount,
    )
    ds.dropped = dropped
    return ds
