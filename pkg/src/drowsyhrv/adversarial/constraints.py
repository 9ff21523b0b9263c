"""Closed-form rules tying derived HRV features to the features they come from.

Each rule rewrites only its output features and leaves a consistent vector
unchanged, so applying a rule set twice gives the same result as once.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_RTOL = 1e-9


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _RTOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Rule:
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    apply: Callable  # (values dict, diff_count) -> dict of outputs, or None to skip
    holds: Callable  # (values dict, diff_count) -> bool

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(self.inputs + self.outputs))


def _hr_order():
    keys = ("hr_min", "hr_mean", "hr_max")

    def apply(v, _):
        lo, mid, hi = sorted(v[k] for k in keys)
        return dict(zip(keys, (lo, mid, hi)))

    def holds(v, _):
        return v["hr_min"] <= v["hr_mean"] <= v["hr_max"]

    return Rule("hr_order", keys, keys, apply, holds)


def _nn_order():
    def apply(v, _):
        return {"nn50": min(v["nn50"], v["nn20"])}

    def holds(v, _):
        return v["nn50"] <= v["nn20"]

    return Rule("nn50_le_nn20", ("nn20",), ("nn50",), apply, holds)


def _pnn(count: str, pct: str):
    def apply(v, diff_count):
        if diff_count <= 0:
            return None
        return {pct: 100.0 * v[count] / diff_count}

    def holds(v, diff_count):
        return diff_count <= 0 or _close(v[pct], 100.0 * v[count] / diff_count)

    return Rule(f"{pct}_from_{count}", (count,), (pct,), apply, holds)


def _relative_sum():
    keys = ("vlf_relative_power", "lf_relative_power", "hf_relative_power")

    def apply(v, _):
        total = sum(v[k] for k in keys)
        if _close(total, 100.0) or total <= 0:
            return None
        return {k: 100.0 * v[k] / total for k in keys}

    def holds(v, _):
        return _close(sum(v[k] for k in keys), 100.0)

    return Rule("relative_power_sum", keys, keys, apply, holds)


def _normalized_sum():
    def apply(v, _):
        if _close(v["lf_normalized"] + v["hf_normalized"], 100.0):
            return None
        return {"hf_normalized": 100.0 - v["lf_normalized"]}

    def holds(v, _):
        return _close(v["lf_normalized"] + v["hf_normalized"], 100.0)

    return Rule("normalized_power_sum", ("lf_normalized",), ("hf_normalized",), apply, holds)


def _poincare_ratio():
    def apply(v, _):
        if v["sd1"] <= 0:
            return None
        return {"sd2_sd1_ratio": v["sd2"] / v["sd1"]}

    def holds(v, _):
        return v["sd1"] <= 0 or _close(v["sd2_sd1_ratio"], v["sd2"] / v["sd1"])

    return Rule("sd2_sd1_ratio", ("sd1", "sd2"), ("sd2_sd1_ratio",), apply, holds)


HRV_RULES: tuple[Rule, ...] = (
    _hr_order(),
    _nn_order(),
    _pnn("nn20", "pnn20"),
    _pnn("nn50", "pnn50"),
    _relative_sum(),
    _normalized_sum(),
    _poincare_ratio(),
)


class ConstraintSet:
    """The rules whose features are all present in ``names``, bound to column positions."""

    def __init__(self, names, rules=HRV_RULES):
        self.names = tuple(names)
        self.index = {n: j for j, n in enumerate(self.names)}
        self.rules = tuple(r for r in rules if all(f in self.index for f in r.features))

    @property
    def derived(self) -> frozenset[str]:
        """Features that some rule overwrites from other features."""
        return frozenset(o for r in self.rules for o in r.outputs if o not in r.inputs)

    def _values(self, x, rule):
        return {f: float(x[self.index[f]]) for f in rule.features}

    def apply(self, x, diff_count: int = 0) -> np.ndarray:
        out = np.array(x, dtype=np.float64)
        for rule in self.rules:
            new = rule.apply(self._values(out, rule), diff_count)
            if new:
                for name, value in new.items():
                    out[self.index[name]] = value
        return out

    def violations(self, x, diff_count: int = 0) -> list[str]:
        return [r.name for r in self.rules if not r.holds(self._values(x, r), diff_count)]

    def satisfied(self, x, diff_count: int = 0) -> bool:
        return not self.violations(x, diff_count)
