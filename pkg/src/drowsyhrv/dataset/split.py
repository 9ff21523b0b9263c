"""Seeded stratified train/holdout split and split manifests."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..errors import ClassTooSmall
from .table import LabeledDataset


def _n_train(count: int, frac: float) -> int:
    # round half up, but keep at least one row on each side
    return min(max(math.floor(frac * count + 0.5), 1), count - 1)


def stratified_split_indices(
    y: np.ndarray, train_frac: float = 0.7, seed: int = 0, groups: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of the train and holdout parts, each sorted ascending.

    With ``groups`` (subject ids) whole groups are assigned to one side,
    which gives a subject-independent split; class proportions then only
    hold approximately.
    """
    y = np.asarray(y)
    if not 0 < train_frac < 1:
        raise ValueError("train_frac must be in (0, 1)")
    rng = np.random.default_rng(seed)
    for label in (0, 1):
        if np.count_nonzero(y == label) < 2:
            raise ClassTooSmall(f"class {label} has fewer than 2 rows")
    if groups is not None:
        return _group_split(y, np.asarray(groups), train_frac, rng)
    train = []
    for label in (0, 1):
        idx = np.flatnonzero(y == label)
        rng.shuffle(idx)
        train.append(idx[: _n_train(idx.size, train_frac)])
    train_idx = np.sort(np.concatenate(train))
    holdout_idx = np.setdiff1d(np.arange(y.size), train_idx)
    return train_idx, holdout_idx


def _group_split(y, groups, train_frac, rng):
    names = sorted(set(groups.tolist()))
    if len(names) < 2:
        raise ClassTooSmall("subject-independent split needs at least 2 subjects")
    order = rng.permutation(len(names))
    target = train_frac * y.size
    in_train, size = [], 0
    for j in order:
        if size >= target or len(in_train) == len(names) - 1:
            break
        in_train.append(names[j])
        size += int(np.count_nonzero(groups == names[j]))
    mask = np.isin(groups, in_train)
    train_idx, holdout_idx = np.flatnonzero(mask), np.flatnonzero(~mask)
    for label in (0, 1):
        if not (np.any(y[train_idx] == label) and np.any(y[holdout_idx] == label)):
            raise ClassTooSmall(f"subject split left class {label} on one side only")
    return train_idx, holdout_idx


def stratified_split(
    dataset: LabeledDataset, train_frac: float = 0.7, seed: int = 0, by_subject: bool = False,
) -> tuple[LabeledDataset, LabeledDataset]:
    groups = dataset.subject_id if by_subject else None
    tr, ho = stratified_split_indices(dataset.y, train_frac, seed, groups)
    return dataset.subset(tr), dataset.subset(ho)


def save_split_manifest(path: str | Path, train_idx, holdout_idx, seed: int, train_frac: float) -> None:
    doc = {
        "seed": int(seed),
        "train_frac": float(train_frac),
        "train": [int(i) for i in train_idx],
        "holdout": [int(i) for i in holdout_idx],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_split_manifest(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return np.asarray(doc["train"], dtype=np.int64), np.asarray(doc["holdout"], dtype=np.int64)
