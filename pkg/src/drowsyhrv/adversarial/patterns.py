"""Class-conditional value patterns: per-feature intervals and observed joint
values of feature groups that move together."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyClass

HRV_GROUPS: tuple[tuple[str, ...], ...] = (
    ("nn20", "pnn20"),
    ("nn50", "pnn50"),
    ("vlf_relative_power", "lf_relative_power", "hf_relative_power"),
    ("sd1", "sd2", "sd2_sd1_ratio"),
    ("hr_min", "hr_mean", "hr_max"),
)
INTEGER_FEATURES = ("nn20", "nn50")


@dataclass(frozen=True)
class ClassPattern:
    label: int
    names: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray
    integer: np.ndarray  # bool per feature
    groups: tuple[tuple[int, ...], ...]  # column indices per declared group
    combos: tuple[np.ndarray, ...]  # observed unique tuples per group, rows sorted

    @property
    def widths(self) -> np.ndarray:
        return self.maxs - self.mins

    def contains(self, x, rtol: float = 1e-9) -> bool:
        """True when every feature of ``x`` lies inside the class interval."""
        x = np.asarray(x, dtype=np.float64)
        slack = rtol * np.maximum(1.0, np.maximum(np.abs(self.mins), np.abs(self.maxs)))
        return bool(np.all(x >= self.mins - slack) and np.all(x <= self.maxs + slack))

    def snap_group(self, g: int, values: np.ndarray) -> np.ndarray:
        """Nearest observed tuple of group ``g``, distances in interval-width units."""
        cols = list(self.groups[g])
        scale = np.where(self.widths[cols] > 0, self.widths[cols], 1.0)
        d = (((self.combos[g] - values) / scale) ** 2).sum(axis=1)
        return self.combos[g][int(np.argmin(d))]


def resolve_groups(names, groups=HRV_GROUPS) -> tuple[tuple[int, ...], ...]:
    """Column indices of each declared group, keeping groups with at least two present members."""
    index = {n: j for j, n in enumerate(names)}
    out = []
    for group in groups:
        cols = tuple(index[n] for n in group if n in index)
        if len(cols) >= 2:
            out.append(cols)
    return tuple(out)


def integer_flags(X: np.ndarray, names, declared=INTEGER_FEATURES) -> np.ndarray:
    """Declared count features, plus every column whose observed values are all whole numbers."""
    X = np.asarray(X, dtype=np.float64)
    whole = np.all(X == np.round(X), axis=0) if X.shape[0] else np.zeros(X.shape[1], bool)
    return np.array([n in declared for n in names]) | whole


def fit_class_patterns(X, y, names, groups=HRV_GROUPS, integer_features=INTEGER_FEATURES) -> dict[int, ClassPattern]:
    """One pattern per class (awake 0, drowsy 1) from the rows of that class only."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).reshape(-1)
    names = tuple(names)
    if X.ndim != 2 or X.shape[1] != len(names) or X.shape[0] != y.size:
        raise ValueError("X, y and names disagree in shape")
    cols = resolve_groups(names, groups)
    flags = integer_flags(X, names, integer_features)
    patterns = {}
    for label in (0, 1):
        rows = X[y == label]
        if rows.shape[0] == 0:
            raise EmptyClass(f"class {label} has no rows to learn a pattern from")
        patterns[label] = ClassPattern(
            label=label,
            names=names,
            mins=rows.min(axis=0),
            maxs=rows.max(axis=0),
            integer=flags.copy(),
            groups=cols,
            combos=tuple(np.unique(rows[:, list(c)], axis=0) for c in cols),
        )
    return patterns
