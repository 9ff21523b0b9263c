"""Grid search scored by mean macro F1 over stratified folds."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ..errors import ClassTooSmallForFolds, DrowsyHrvError
from .base import Classifier, check_Xy
from .metrics import evaluate
from .registry import make_model


def stratified_kfold(y, n_folds: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train, validation) index pairs; each class is dealt round-robin across folds."""
    y = np.asarray(y)
    for label in (0, 1):
        if np.count_nonzero(y == label) < n_folds:
            raise ClassTooSmallForFolds(f"class {label} has fewer than {n_folds} rows")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=np.int64)
    start = 0
    for label in (0, 1):
        idx = np.flatnonzero(y == label)
        rng.shuffle(idx)
        fold_of[idx] = (start + np.arange(idx.size)) % n_folds
        start = (start + idx.size) % n_folds
    folds = []
    for k in range(n_folds):
        val = np.flatnonzero(fold_of == k)
        folds.append((np.flatnonzero(fold_of != k), val))
    return folds


def expand_grid(grid: dict[str, list]) -> list[dict]:
    """Cartesian product in insertion order, last key varying fastest."""
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


@dataclass
class GridSearchResult:
    best_params: dict
    table: list[dict]
    model: Classifier = field(repr=False)


def _score_cell(algorithm, params, X, y, tr, va, seed):
    try:
        model = make_model(algorithm, params, seed).fit(X[tr], y[tr])
    except DrowsyHrvError as err:
        return None, f"{type(err).__name__}: {err}"
    return evaluate(model, X[va], y[va]).macro_f1, None


def grid_search_cv(
    algorithm: str,
    grid: dict[str, list],
    X,
    y,
    folds: int = 5,
    seed: int = 0,
    n_jobs: int = 1,
) -> GridSearchResult:
    """Pick the combination with the best mean fold macro F1, then refit on all of ``X``.

    Ties go to the earlier combination in grid order. A combination whose fit
    fails on any fold (e.g. SMO not converging) is recorded and skipped.
    """
    X, y = check_Xy(X, y)
    splits = stratified_kfold(y, folds, seed)
    combos = expand_grid(grid)
    cells = [(c, k) for c in range(len(combos)) for k in range(folds)]
    if n_jobs == 1:
        out = [_score_cell(algorithm, combos[c], X, y, *splits[k], seed) for c, k in cells]
    else:
        out = Parallel(n_jobs=n_jobs)(
            delayed(_score_cell)(algorithm, combos[c], X, y, *splits[k], seed) for c, k in cells
        )
    table = []
    for c, params in enumerate(combos):
        scores = [out[c * folds + k] for k in range(folds)]
        errors = [e for _, e in scores if e]
        fold_scores = [s for s, _ in scores]
        table.append({
            "params": params,
            "fold_macro_f1": fold_scores,
            "mean_macro_f1": None if errors else float(np.mean(fold_scores)),
            "error": errors[0] if errors else None,
        })
    valid = [i for i, row in enumerate(table) if row["mean_macro_f1"] is not None]
    if not valid:
        raise DrowsyHrvError(f"every {algorithm} grid combination failed: {table[0]['error']}")
    best = max(valid, key=lambda i: (table[i]["mean_macro_f1"], -i))
    model = make_model(algorithm, combos[best], seed).fit(X, y)
    return GridSearchResult(dict(combos[best]), table, model)
