"""Experiment configuration: schema, defaults, validation and the resolved form.

A config is a YAML (or JSON) mapping. ``manifest`` and ``seed`` are required;
there is no wall-clock seeding. Relative paths resolve against the directory
holding the config file. Every default is written back out with the run so
the output directory is self-describing.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .errors import ConfigInvalid, InputMissing
from .hrv import SpectralConfig
from .models import ALGORITHMS, DEFAULT_GRIDS

TRAINING_MODES = ("regular", "adversarial", "both")
FEATURE_MODES = ("full31", "selected")
SELECTION_POLICIES = ("once", "per_window")


@dataclass(frozen=True)
class ShapSettings:
    background: int = 50
    budget: int = 1024
    eval_rows: int = 20


@dataclass(frozen=True)
class AttackSettings:
    max_iter: int = 30
    magnitude: float = 0.1


@dataclass(frozen=True)
class SelectionSettings:
    target: int = 18
    policy: str = "once"


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: str
    out: str = "out"
    windows: tuple[int, ...] = (60, 90, 120, 150, 180, 210)
    algorithms: tuple[str, ...] = ALGORITHMS
    grids: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_GRIDS))
    spectral: SpectralConfig = SpectralConfig()
    seed: int = 0
    train_frac: float = 0.7
    cv_folds: int = 5
    split_by_subject: bool = False
    training_mode: str = "both"
    feature_mode: str = "full31"
    selection: SelectionSettings = SelectionSettings()
    shap: ShapSettings = ShapSettings()
    attack: AttackSettings = AttackSettings()
    workers: int = 1

    def modes(self) -> tuple[str, ...]:
        return ("regular", "adversarial") if self.training_mode == "both" else (self.training_mode,)

    def to_dict(self) -> dict:
        sub = lambda obj: {f.name: getattr(obj, f.name) for f in fields(obj)}  # noqa: E731
        d = sub(self)
        d["windows"] = list(self.windows)
        d["algorithms"] = list(self.algorithms)
        for key in ("spectral", "selection", "shap", "attack"):
            d[key] = sub(d[key])
        for name in ("vlf_band", "lf_band", "hf_band"):
            d["spectral"][name] = list(d["spectral"][name])
        return d


def _section(cls, raw, name):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{name} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigInvalid(f"unknown {name} keys: {sorted(unknown)}")
    try:
        if cls is SpectralConfig:
            raw = {k: tuple(v) if k.endswith("_band") else v for k, v in raw.items()}
        return cls(**raw)
    except (TypeError, ValueError) as err:
        raise ConfigInvalid(f"invalid {name}: {err}") from err


def _int(value, name) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigInvalid(f"{name} must be an integer, got {value!r}")
    return value


def config_from_dict(raw: dict, base_dir: str | Path = ".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a mapping")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {sorted(unknown)}")
    if "manifest" not in raw:
        raise ConfigInvalid("config needs a 'manifest' path")
    base = Path(base_dir).resolve()
    resolve = lambda p: str(p if Path(p).is_absolute() else (base / p))  # noqa: E731

    windows = tuple(_int(w, "window size") for w in raw.get("windows", ExperimentConfig.windows))
    if not windows:
        raise ConfigInvalid("at least one window size is required")
    bad = [w for w in windows if not 60 <= w <= 210]
    if bad:
        raise ConfigInvalid(f"window sizes must lie in [60, 210] s, got {bad}")

    algorithms = tuple(raw.get("algorithms", ALGORITHMS))
    if not algorithms:
        raise ConfigInvalid("at least one algorithm is required")
    unknown_alg = [a for a in algorithms if a not in ALGORITHMS]
    if unknown_alg:
        raise ConfigInvalid(f"unknown algorithms {unknown_alg}; choose from {ALGORITHMS}")

    grids = copy.deepcopy(DEFAULT_GRIDS)
    for alg, grid in (raw.get("grids") or {}).items():
        if alg not in ALGORITHMS or not isinstance(grid, dict) or not grid:
            raise ConfigInvalid(f"grid for {alg!r} must be a non-empty mapping of lists")
        if any(not isinstance(v, list) or not v for v in grid.values()):
            raise ConfigInvalid(f"grid for {alg!r} needs non-empty value lists")
        grids[alg] = grid
    grids = {a: grids[a] for a in algorithms}

    if "seed" not in raw:
        raise ConfigInvalid("config needs an explicit integer 'seed'")
    cfg = ExperimentConfig(
        manifest=resolve(raw["manifest"]),
        out=resolve(raw.get("out", "out")),
        windows=windows,
        algorithms=algorithms,
        grids=grids,
        spectral=_section(SpectralConfig, raw.get("spectral"), "spectral"),
        seed=_int(raw["seed"], "seed"),
        train_frac=float(raw.get("train_frac", 0.7)),
        cv_folds=_int(raw.get("cv_folds", 5), "cv_folds"),
        split_by_subject=bool(raw.get("split_by_subject", False)),
        training_mode=raw.get("training_mode", "both"),
        feature_mode=raw.get("feature_mode", "full31"),
        selection=_section(SelectionSettings, raw.get("selection"), "selection"),
        shap=_section(ShapSettings, raw.get("shap"), "shap"),
        attack=_section(AttackSettings, raw.get("attack"), "attack"),
        workers=_int(raw.get("workers", 1), "workers"),
    )
    if cfg.training_mode not in TRAINING_MODES:
        raise ConfigInvalid(f"training_mode must be one of {TRAINING_MODES}")
    if cfg.feature_mode not in FEATURE_MODES:
        raise ConfigInvalid(f"feature_mode must be one of {FEATURE_MODES}")
    if cfg.selection.policy not in SELECTION_POLICIES:
        raise ConfigInvalid(f"selection.policy must be one of {SELECTION_POLICIES}")
    if not 0 < cfg.train_frac < 1:
        raise ConfigInvalid("train_frac must lie strictly between 0 and 1")
    if cfg.cv_folds < 2 or cfg.workers < 1 or cfg.selection.target < 1:
        raise ConfigInvalid("cv_folds must be >= 2, workers and selection.target >= 1")
    if not 0 <= cfg.attack.max_iter <= 30 or cfg.attack.magnitude < 0:
        raise ConfigInvalid("attack.max_iter must lie in [0, 30] and magnitude be non-negative")
    if cfg.shap.background < 1 or cfg.shap.eval_rows < 1:
        raise ConfigInvalid("shap.background and shap.eval_rows must be positive")
    return cfg


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise InputMissing(f"config file {path} not found")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as err:
        raise ConfigInvalid(f"cannot parse {path}: {err}") from err
    raw = dict(raw or {})
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return config_from_dict(raw, path.parent)


def save_resolved_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
