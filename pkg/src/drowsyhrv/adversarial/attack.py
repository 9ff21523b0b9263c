"""Constrained perturbations, adversarial training data and the black-box evasion attack.

The attacker sees the holdout rows and the model's predicted labels only. It
pushes drowsy rows towards an awake prediction; awake rows are never touched.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset import LabeledDataset
from ..dataset.table import PROVENANCE
from ..errors import EmptyClass
from ..models.metrics import Metrics, metrics_from_predictions
from .constraints import ConstraintSet
from .patterns import ClassPattern, fit_class_patterns

DEFAULT_MAGNITUDE = 0.1
MAX_ITERATIONS = 30


def row_rng(seed: int, row: int) -> np.random.Generator:
    """Independent stream for one row, derived from the master seed and the row id."""
    return np.random.default_rng(np.random.SeedSequence([seed, row]))


def is_valid(x, pattern: ClassPattern, constraints: ConstraintSet, diff_count: int = 0) -> bool:
    return pattern.contains(x) and constraints.satisfied(x, diff_count)


def perturb_sample(
    sample,
    pattern: ClassPattern,
    constraints: ConstraintSet,
    magnitude: float = DEFAULT_MAGNITUDE,
    seed=None,
    diff_count: int = 0,
    subset_size: int | None = None,
    max_tries: int = 100,
) -> np.ndarray:
    """One constrained perturbation of ``sample`` inside its class pattern.

    A random subset of ``ceil(M/4)`` features gets uniform noise of up to
    ``magnitude`` times the class interval width and is clamped back in.
    Count features are rounded, touched groups snap to their nearest observed
    tuple, and derived features are recomputed. A candidate leaving an interval
    or breaking a rule is discarded and redrawn. When ``max_tries`` candidates
    all fail, or nothing can move, the input comes back unchanged.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x0 = np.asarray(sample, dtype=np.float64)
    if magnitude == 0:
        return x0.copy()
    widths = pattern.widths
    derived = {constraints.index[n] for n in constraints.derived}
    movable = np.array([j for j in range(x0.size) if widths[j] > 0 and j not in derived], dtype=np.int64)
    if movable.size == 0:
        return x0.copy()
    k = min(subset_size or math.ceil(x0.size / 4), movable.size)
    for _ in range(max_tries):
        cols = rng.choice(movable, size=k, replace=False)
        x = x0.copy()
        x[cols] += rng.uniform(-1.0, 1.0, k) * magnitude * widths[cols]
        ints = cols[pattern.integer[cols]]
        x[ints] = np.round(x[ints])
        x[cols] = np.clip(x[cols], pattern.mins[cols], pattern.maxs[cols])
        touched = set(cols.tolist())
        for g, gcols in enumerate(pattern.groups):
            if touched.intersection(gcols):
                x[list(gcols)] = pattern.snap_group(g, x[list(gcols)])
        x = constraints.apply(x, diff_count)
        if not np.array_equal(x, x0) and is_valid(x, pattern, constraints, diff_count):
            return x
    return x0.copy()


def augment_training_set(
    train: LabeledDataset,
    patterns: dict[int, ClassPattern] | None = None,
    constraints: ConstraintSet | None = None,
    seed: int = 0,
    magnitude: float = DEFAULT_MAGNITUDE,
) -> LabeledDataset:
    """``train`` plus one perturbed copy of every drowsy row, appended in row order."""
    drowsy = np.flatnonzero(train.y == 1)
    if drowsy.size == 0:
        raise EmptyClass("training set has no drowsy rows to augment")
    if patterns is None:
        patterns = fit_class_patterns(train.X, train.y, train.feature_names)
    constraints = constraints or ConstraintSet(train.feature_names)
    copies = np.array([
        perturb_sample(train.X[r], patterns[1], constraints, magnitude, row_rng(seed, int(r)), int(train.diff_count[r]))
        for r in drowsy
    ]).reshape(drowsy.size, train.X.shape[1])
    src = train.subset(drowsy)
    extra = LabeledDataset(
        copies, src.y, train.feature_names,
        **{k: getattr(src, k) for k in PROVENANCE if k != "augmented"},
        augmented=np.ones(drowsy.size, dtype=bool),
    )
    return train.concat(extra)


@dataclass
class AttackReport:
    metrics: list[Metrics]
    first_success: np.ndarray  # iteration a drowsy row was first predicted awake, -1 if never or awake
    total_perturbations: int
    fooled_fraction: float
    X_adv: np.ndarray
    examples: list[tuple[int, int, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def iterations(self) -> int:
        return len(self.metrics) - 1

    def fooled_counts(self) -> list[int]:
        """Size of the fooled set after each recorded iteration."""
        fs = self.first_success[self.first_success >= 0]
        return [int(np.count_nonzero(fs <= it)) for it in range(len(self.metrics))]

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "total_perturbations": self.total_perturbations,
            "fooled_fraction": self.fooled_fraction,
            "first_success": [None if v < 0 else int(v) for v in self.first_success],
            "metrics": [m.to_dict() for m in self.metrics],
        }


def run_attack(
    model,
    holdout: LabeledDataset,
    patterns: dict[int, ClassPattern] | None = None,
    constraints: ConstraintSet | None = None,
    max_iter: int = MAX_ITERATIONS,
    seed: int = 0,
    magnitude: float = DEFAULT_MAGNITUDE,
    keep_examples: bool = False,
) -> AttackReport:
    """Iterated drowsy-to-awake evasion attack.

    Every iteration perturbs each not-yet-fooled drowsy row from its last
    state and queries the model. Metrics are recorded on the holdout with
    drowsy rows in their current adversarial state; entry 0 is the clean run.
    """
    if patterns is None:
        patterns = fit_class_patterns(holdout.X, holdout.y, holdout.feature_names)
    constraints = constraints or ConstraintSet(holdout.feature_names)
    y = holdout.y
    X_adv = holdout.X.copy()
    pred = model.predict(X_adv)
    metrics = [metrics_from_predictions(y, pred)]
    drowsy = np.flatnonzero(y == 1)
    first = np.full(y.size, -1, dtype=np.int64)
    first[drowsy[pred[drowsy] == 0]] = 0
    rngs = {int(r): row_rng(seed, int(r)) for r in drowsy}
    examples = []
    total = 0
    for it in range(1, max_iter + 1):
        active = drowsy[first[drowsy] < 0]
        if active.size == 0:
            break
        for r in active:
            X_adv[r] = perturb_sample(
                X_adv[r], patterns[1], constraints, magnitude, rngs[int(r)], int(holdout.diff_count[r])
            )
            if keep_examples:
                examples.append((int(r), it, X_adv[r].copy()))
        total += active.size
        fooled_now = model.predict(X_adv[active]) == 0
        first[active[fooled_now]] = it
        metrics.append(metrics_from_predictions(y, model.predict(X_adv)))
    fooled = int(np.count_nonzero(first[drowsy] >= 0))
    return AttackReport(
        metrics=metrics,
        first_success=first,
        total_perturbations=total,
        fooled_fraction=fooled / drowsy.size if drowsy.size else 0.0,
        X_adv=X_adv,
        examples=examples,
    )


def save_attack_report(path: str | Path, report: AttackReport) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_attack_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def save_adversarial_set(path: str | Path, holdout: LabeledDataset, report: AttackReport) -> None:
    """Holdout rows in their final adversarial state, in dataset CSV layout plus attack columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(holdout.feature_names) + ["label"] + list(PROVENANCE) + ["source_row", "iteration", "fooled"])
        for i in range(len(holdout)):
            it = int(report.first_success[i])
            w.writerow(
                [repr(float(v)) for v in report.X_adv[i]]
                + [int(holdout.y[i]), holdout.subject_id[i], int(holdout.session_index[i]),
                   int(holdout.window_index[i]), int(holdout.window_size[i]),
                   int(holdout.diff_count[i]), int(holdout.augmented[i])]
                + [i, it, int(it >= 0)]
            )


def save_trajectory_csv(path: str | Path, report: AttackReport) -> None:
    """One row per recorded iteration: macro F1, accuracy, drowsy recall and fooled count."""
    counts = report.fooled_counts()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "macro_f1", "accuracy", "drowsy_recall", "fooled"])
        for it, m in enumerate(report.metrics):
            w.writerow([it, repr(m.macro_f1), repr(m.accuracy), repr(m.recall[1]), counts[it]])
