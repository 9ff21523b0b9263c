"""Staged experiment pipeline over the (window size x algorithm) matrix.

Every stage reads the artifacts of the stage before it from the output
directory and writes its own, so any stage can be rerun on its own.

    out/
      config.resolved.json
      labels.json
      windows/w{W}/features.csv, dataset.csv, split.json
      cells/w{W}_{alg}_{feature_set}/
        status.json, tuning.json, ranking.json, phi.csv
        {mode}/model.json, metrics.json, predictions.csv,
               attack.json, trajectory.csv, adversarial.csv
      selection.json
      summary.json
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from joblib import Parallel, delayed

from .adversarial import (
    augment_training_set,
    fit_class_patterns,
    run_attack,
    save_adversarial_set,
    save_attack_report,
    save_trajectory_csv,
)
from .config import ExperimentConfig, save_resolved_config
from .dataset import (
    LabeledDataset,
    SessionLabel,
    SessionRecording,
    build_dataset,
    label_subjects,
    load_split_manifest,
    read_pvt_file,
    save_split_manifest,
    stratified_split_indices,
)
from .errors import ArtifactMissing, DrowsyHrvError, InputMissing
from .explain import (
    FeatureRanking,
    load_ranking,
    ranking_from_phi,
    sample_background,
    save_phi_csv,
    save_ranking,
    select_features,
    shap_matrix,
)
from .hrv import WindowSpec, read_rr_file
from .models import (
    evaluate,
    grid_search_cv,
    load_model,
    make_model,
    save_model,
    save_predictions,
)
from .report import emit_report

log = logging.getLogger(__name__)

FEATURE_SETS = ("full31", "selected")


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _read_json(path: Path):
    if not path.is_file():
        raise ArtifactMissing(f"{path} not found; run the earlier stage first")
    return json.loads(path.read_text(encoding="utf-8"))


def _error_record(err: BaseException) -> dict:
    return {"type": type(err).__name__, "message": str(err)}


# -- inputs ------------------------------------------------------------------

@dataclass(frozen=True)
class SessionEntry:
    subject_id: str
    session_index: int
    rr_path: Path
    pvt_path: Path
    session_length_s: float | None


def read_manifest(path: str | Path) -> list[SessionEntry]:
    """Session list from a JSON manifest; file paths are relative to the manifest."""
    path = Path(path)
    if not path.is_file():
        raise InputMissing(f"manifest {path} not found")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        entries = [
            SessionEntry(
                str(s["subject_id"]), int(s["session_index"]),
                path.parent / s["rr_path"], path.parent / s["pvt_path"],
                float(s["session_length_s"]) if s.get("session_length_s") is not None else None,
            )
            for s in doc["sessions"]
        ]
    except (KeyError, TypeError, ValueError) as err:
        raise InputMissing(f"manifest {path} is malformed: {err}") from err
    missing = [str(p) for e in entries for p in (e.rr_path, e.pvt_path) if not p.is_file()]
    if missing:
        raise InputMissing(f"missing input files: {missing[:5]}")
    if not entries:
        raise InputMissing(f"manifest {path} lists no sessions")
    return entries


def _recordings(entries: list[SessionEntry]) -> list[SessionRecording]:
    recs = []
    for e in entries:
        series = read_rr_file(e.rr_path)
        length = e.session_length_s if e.session_length_s is not None else float(series.intervals_ms.sum()) / 1000
        recs.append(SessionRecording(e.subject_id, e.session_index, series, length, SessionLabel.AWAKE))
    return recs


# -- layout ------------------------------------------------------------------

def window_dir(out: Path, window: int) -> Path:
    return out / "windows" / f"w{window}"


def cell_id(window: int, algorithm: str, feature_set: str) -> str:
    return f"w{window}_{algorithm}_{feature_set}"


def cell_dir(out: Path, window: int, algorithm: str, feature_set: str) -> Path:
    return out / "cells" / cell_id(window, algorithm, feature_set)


def _cells(cfg: ExperimentConfig, feature_set: str):
    return [(w, a, feature_set) for w in cfg.windows for a in cfg.algorithms]


def _set_status(cdir: Path, stage: str, err: BaseException | None = None) -> None:
    doc = {"status": "ok", "stage": stage} if err is None else {
        "status": "failed", "stage": stage, "error": _error_record(err)}
    _write_json(cdir / "status.json", doc)


def _cell_ok(cdir: Path) -> bool:
    p = cdir / "status.json"
    return p.is_file() and json.loads(p.read_text(encoding="utf-8"))["status"] == "ok"


# -- window stages -----------------------------------------------------------

def stage_features(cfg: ExperimentConfig) -> dict[int, str]:
    """Windowed HRV features for every window size (labels not yet attached)."""
    recs = _recordings(read_manifest(cfg.manifest))
    out = Path(cfg.out)
    status = {}
    for w in cfg.windows:
        wdir = window_dir(out, w)
        wdir.mkdir(parents=True, exist_ok=True)
        (wdir / "error.json").unlink(missing_ok=True)
        try:
            ds = build_dataset(recs, WindowSpec(w), cfg.spectral)
            ds.to_csv(wdir / "features.csv", with_label=False)
            status[w] = "ok"
            log.info("window %ds: %d rows, %d dropped", w, len(ds), ds.dropped)
        except DrowsyHrvError as err:
            _write_json(wdir / "error.json", _error_record(err))
            status[w] = "failed"
            log.warning("window %ds failed: %s", w, err)
    return status


def stage_label(cfg: ExperimentConfig) -> dict[tuple[str, int], int]:
    """Session labels from the PVT files, joined onto every feature table."""
    entries = read_manifest(cfg.manifest)
    labels = label_subjects([read_pvt_file(e.pvt_path, e.subject_id, e.session_index) for e in entries])
    out = Path(cfg.out)
    _write_json(out / "labels.json", [
        {"subject_id": s, "session_index": i, "label": int(lab)} for (s, i), lab in sorted(labels.items())
    ])
    for w in cfg.windows:
        wdir = window_dir(out, w)
        if (wdir / "error.json").is_file():
            continue
        feats = LabeledDataset.from_csv(_require(wdir / "features.csv"))
        y = [int(labels[(s, int(i))]) for s, i in zip(feats.subject_id, feats.session_index)]
        feats.with_labels(y).to_csv(wdir / "dataset.csv")
    return {k: int(v) for k, v in labels.items()}


def stage_split(cfg: ExperimentConfig) -> None:
    out = Path(cfg.out)
    for w in cfg.windows:
        wdir = window_dir(out, w)
        if (wdir / "error.json").is_file():
            continue
        ds = LabeledDataset.from_csv(_require(wdir / "dataset.csv"))
        try:
            tr, ho = stratified_split_indices(
                ds.y, cfg.train_frac, cfg.seed, ds.subject_id if cfg.split_by_subject else None)
        except DrowsyHrvError as err:
            _write_json(wdir / "error.json", _error_record(err))
            log.warning("window %ds cannot be split: %s", w, err)
            continue
        save_split_manifest(wdir / "split.json", tr, ho, cfg.seed, cfg.train_frac)


def _require(path: Path) -> Path:
    if not path.is_file():
        raise ArtifactMissing(f"{path} not found; run the earlier stage first")
    return path


def load_window_split(out: Path, window: int) -> tuple[LabeledDataset, LabeledDataset]:
    wdir = window_dir(out, window)
    if (wdir / "error.json").is_file():
        err = _read_json(wdir / "error.json")
        raise DrowsyHrvError(f"window {window}s unavailable: {err['type']}: {err['message']}")
    ds = LabeledDataset.from_csv(_require(wdir / "dataset.csv"))
    tr, ho = load_split_manifest(_require(wdir / "split.json"))
    return ds.subset(tr), ds.subset(ho)


# -- cell stages -------------------------------------------------------------

def _selected_names(out: Path, window: int) -> list[str]:
    doc = _read_json(out / "selection.json")
    if doc["policy"] == "per_window":
        return doc["by_window"][str(window)]
    return doc["features"]


def _cell_data(cfg, out, window, feature_set):
    train, holdout = load_window_split(out, window)
    if feature_set == "selected":
        names = _selected_names(out, window)
        train, holdout = train.with_features(names), holdout.with_features(names)
    return train, holdout


def train_cell(cfg: ExperimentConfig, window: int, algorithm: str, feature_set: str) -> str:
    out = Path(cfg.out)
    cdir = cell_dir(out, window, algorithm, feature_set)
    cdir.mkdir(parents=True, exist_ok=True)
    try:
        train, holdout = _cell_data(cfg, out, window, feature_set)
        search = grid_search_cv(algorithm, cfg.grids[algorithm], train.X, train.y, cfg.cv_folds, cfg.seed)
        _write_json(cdir / "tuning.json", {"best_params": search.best_params, "table": search.table})
        for mode in cfg.modes():
            if mode == "regular":
                model = search.model
            else:
                aug = augment_training_set(train, seed=cfg.seed, magnitude=cfg.attack.magnitude)
                model = make_model(algorithm, search.best_params, cfg.seed).fit(aug.X, aug.y)
            mdir = cdir / mode
            mdir.mkdir(exist_ok=True)
            save_model(mdir / "model.json", model, train.feature_names)
            _write_json(mdir / "metrics.json", evaluate(model, holdout.X, holdout.y).to_dict())
            save_predictions(mdir / "predictions.csv", holdout.y, model.predict(holdout.X))
        _set_status(cdir, "train")
        return "ok"
    except DrowsyHrvError as err:
        log.warning("cell %s failed in training: %s", cdir.name, err)
        _set_status(cdir, "train", err)
        return "failed"


def explain_cell(cfg: ExperimentConfig, window: int, algorithm: str) -> FeatureRanking | None:
    out = Path(cfg.out)
    cdir = cell_dir(out, window, algorithm, "full31")
    if not _cell_ok(cdir):
        return None
    try:
        train, holdout = _cell_data(cfg, out, window, "full31")
        model, names = load_model(_require(cdir / "regular" / "model.json"))
        background = sample_background(train.X, cfg.shap.background, cfg.seed)
        rows = sample_background(holdout.X, cfg.shap.eval_rows, cfg.seed + 1)
        phi, base = shap_matrix(model, rows, background, cfg.shap.budget, seed=cfg.seed)
        ranking = ranking_from_phi(phi, names)
        save_ranking(cdir / "ranking.json", ranking)
        save_phi_csv(cdir / "phi.csv", phi, base, names)
        return ranking
    except DrowsyHrvError as err:
        log.warning("cell %s failed in explanation: %s", cdir.name, err)
        _set_status(cdir, "explain", err)
        return None


def attack_cell(cfg: ExperimentConfig, window: int, algorithm: str, feature_set: str) -> str:
    out = Path(cfg.out)
    cdir = cell_dir(out, window, algorithm, feature_set)
    if not _cell_ok(cdir):
        return "skipped"
    try:
        _, holdout = _cell_data(cfg, out, window, feature_set)
        # the attacker learns class patterns from the holdout rows it can see
        patterns = fit_class_patterns(holdout.X, holdout.y, holdout.feature_names)
        for mode in cfg.modes():
            mdir = cdir / mode
            model, _ = load_model(_require(mdir / "model.json"))
            report = run_attack(model, holdout, patterns, None, cfg.attack.max_iter, cfg.seed, cfg.attack.magnitude)
            save_attack_report(mdir / "attack.json", report)
            save_trajectory_csv(mdir / "trajectory.csv", report)
            save_adversarial_set(mdir / "adversarial.csv", holdout, report)
        _set_status(cdir, "attack")
        return "ok"
    except DrowsyHrvError as err:
        log.warning("cell %s failed in the attack: %s", cdir.name, err)
        _set_status(cdir, "attack", err)
        return "failed"


def _fan_out(cfg, fn, jobs):
    if cfg.workers == 1 or len(jobs) < 2:
        return [fn(cfg, *job) for job in jobs]
    return Parallel(n_jobs=cfg.workers)(delayed(fn)(cfg, *job) for job in jobs)


def stage_train(cfg: ExperimentConfig, feature_set: str = "full31") -> list[str]:
    if feature_set == "selected":
        _require(Path(cfg.out) / "selection.json")
    return _fan_out(cfg, train_cell, _cells(cfg, feature_set))


def _clean_f1(out: Path, window: int, algorithm: str) -> float:
    return _read_json(cell_dir(out, window, algorithm, "full31") / "regular" / "metrics.json")["macro_f1"]


def stage_explain(cfg: ExperimentConfig) -> dict:
    """Rankings for every trained full-feature cell, then the cross-model selection."""
    out = Path(cfg.out)
    jobs = [(w, a) for w in cfg.windows for a in cfg.algorithms]
    rankings = dict(zip(jobs, _fan_out(cfg, explain_cell, jobs)))
    ranked = {k: r for k, r in rankings.items() if r is not None}
    if not ranked:
        raise ArtifactMissing("no trained cell could be explained; nothing to select from")
    target = cfg.selection.target
    if cfg.selection.policy == "once":
        # best window per algorithm by clean macro F1; ties go to the smaller window
        sources = []
        for a in cfg.algorithms:
            cands = [(-_clean_f1(out, w, a), w) for (w, alg) in ranked if alg == a]
            if cands:
                sources.append((min(cands)[1], a))
        features = select_features([ranked[s] for s in sources], target)
        doc = {"policy": "once", "target": target, "features": features,
               "sources": [cell_id(w, a, "full31") for w, a in sources]}
    else:
        by_window, sources = {}, {}
        for w in cfg.windows:
            keys = [(w, a) for a in cfg.algorithms if (w, a) in ranked]
            if keys:
                by_window[str(w)] = select_features([ranked[k] for k in keys], target)
                sources[str(w)] = [cell_id(w, a, "full31") for _, a in keys]
        doc = {"policy": "per_window", "target": target, "by_window": by_window, "sources": sources}
    _write_json(out / "selection.json", doc)
    return doc


def stage_attack(cfg: ExperimentConfig) -> list[str]:
    sets = ["full31"] + (["selected"] if cfg.feature_mode == "selected" else [])
    jobs = [c for fs in sets for c in _cells(cfg, fs)]
    return _fan_out(cfg, attack_cell, jobs)


# -- summary -----------------------------------------------------------------

def _cell_summary(out: Path, cfg: ExperimentConfig, window: int, algorithm: str, feature_set: str) -> dict:
    cdir = cell_dir(out, window, algorithm, feature_set)
    entry = {"window": window, "algorithm": algorithm, "feature_set": feature_set}
    status_path = cdir / "status.json"
    if not status_path.is_file():
        wdir = window_dir(out, window)
        err = _read_json(wdir / "error.json") if (wdir / "error.json").is_file() else {
            "type": "ArtifactMissing", "message": "cell was not run"}
        return {**entry, "status": "failed", "error": err}
    status = json.loads(status_path.read_text(encoding="utf-8"))
    if status["status"] != "ok":
        return {**entry, "status": "failed", "stage": status["stage"], "error": status["error"]}
    tuning = _read_json(cdir / "tuning.json")
    entry.update(status="ok", best_params=tuning["best_params"], modes={})
    for mode in cfg.modes():
        mdir = cdir / mode
        clean = _read_json(mdir / "metrics.json")
        m = {"clean_macro_f1": clean["macro_f1"], "clean_metrics": clean}
        if (mdir / "attack.json").is_file():
            att = _read_json(mdir / "attack.json")
            traj = [it["macro_f1"] for it in att["metrics"]]
            m.update(attacked_macro_f1=traj[-1], trajectory=traj, iterations=att["iterations"],
                     fooled_fraction=att["fooled_fraction"], total_perturbations=att["total_perturbations"])
        entry["modes"][mode] = m
    if (cdir / "ranking.json").is_file():
        entry["top_features"] = load_ranking(cdir / "ranking.json").top(10)
    return entry


def write_summary(cfg: ExperimentConfig) -> dict:
    out = Path(cfg.out)
    sets = ["full31"] + (["selected"] if cfg.feature_mode == "selected" else [])
    cells = [_cell_summary(out, cfg, w, a, fs) for fs in sets for w, a, _ in _cells(cfg, fs)]
    summary = {
        "windows": list(cfg.windows),
        "algorithms": list(cfg.algorithms),
        "training_modes": list(cfg.modes()),
        "feature_mode": cfg.feature_mode,
        "seed": cfg.seed,
        "cells": cells,
    }
    if (out / "selection.json").is_file():
        summary["selection"] = _read_json(out / "selection.json")
    _write_json(out / "summary.json", summary)
    return summary


# -- full run ----------------------------------------------------------------

PIPELINE_STAGES = ("features", "label", "split", "train", "explain", "attack", "report")


def run_pipeline(cfg: ExperimentConfig, stop_after: str | None = None) -> tuple[int, dict | None]:
    """All stages in order. Returns (exit status, summary); 3 when every cell failed."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_resolved_config(cfg, out / "config.resolved.json")
    steps = [
        ("features", lambda: stage_features(cfg)),
        ("label", lambda: stage_label(cfg)),
        ("split", lambda: stage_split(cfg)),
        ("train", lambda: stage_train(cfg, "full31")),
        ("explain", lambda: _explain_and_retrain(cfg)),
        ("attack", lambda: stage_attack(cfg)),
    ]
    for name, step in steps:
        step()
        if name == stop_after:
            return 0, None
    summary = write_summary(cfg)
    if not any(c["status"] == "ok" for c in summary["cells"]):
        return 3, summary
    emit_report(out)
    return 0, summary


def _explain_and_retrain(cfg: ExperimentConfig) -> None:
    needs_selection = cfg.feature_mode == "selected"
    try:
        stage_explain(cfg)
    except ArtifactMissing:
        if needs_selection:
            raise
        log.warning("no cell could be explained")
        return
    if needs_selection:
        stage_train(cfg, "selected")


def trained_cells(out: Path) -> list[Path]:
    root = Path(out) / "cells"
    return sorted(p for p in root.iterdir() if p.is_dir()) if root.is_dir() else []


__all__ = [
    "FEATURE_SETS", "PIPELINE_STAGES", "SessionEntry", "attack_cell", "cell_dir", "cell_id",
    "explain_cell", "load_window_split", "read_manifest", "run_pipeline", "stage_attack",
    "stage_explain", "stage_features", "stage_label", "stage_split", "stage_train", "train_cell",
    "trained_cells", "window_dir", "write_summary",
]
