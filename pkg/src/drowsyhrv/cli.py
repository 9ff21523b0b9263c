"""Command-line entry point.

Exit status: 0 success, 1 configuration error, 2 missing input or artifact,
3 runtime failure (including every cell of the matrix failing). Errors are
also printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_config, save_resolved_config
from .errors import ArtifactMissing, ConfigInvalid, DrowsyHrvError, InputMissing
from .pipeline import (
    PIPELINE_STAGES,
    run_pipeline,
    stage_attack,
    stage_explain,
    stage_features,
    stage_label,
    stage_split,
    stage_train,
    write_summary,
)
from .report import emit_report
from .synthetic import CohortSpec, make_cohort, write_cohort

log = logging.getLogger("drowsyhrv")

EXAMPLE_CONFIG = """\
# HRV drowsiness experiment; every key except manifest and seed is optional
manifest: manifest.json
out: out
seed: 0
windows: [60, 90, 120, 150, 180, 210]
algorithms: [svm, knn, xgb, lgbm]
training_mode: both        # regular | adversarial | both
feature_mode: full31       # full31 | selected
selection: {target: 18, policy: once}
shap: {background: 50, budget: 1024, eval_rows: 20}
attack: {max_iter: 30, magnitude: 0.1}
workers: 1
grids:
  xgb: {n_trees: [50, 100], max_depth: [3, 5], learning_rate: [0.1, 0.3]}
  lgbm: {n_trees: [50, 100], max_leaves: [15, 31], learning_rate: [0.1, 0.3]}
"""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drowsyhrv", description="HRV-based driver drowsiness experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def stage(name, help_text, config_required=True):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=config_required, type=Path, help="experiment config (YAML or JSON)")
        sp.add_argument("--out", type=Path, help="output directory (overrides the config)")
        sp.add_argument("--workers", type=int, help="parallel cells (overrides the config)")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
        return sp

    stage("features", "compute windowed HRV features")
    stage("label", "label sessions from PVT files and attach labels")
    stage("split", "stratified train/holdout split per window")
    stage("train", "tune and train every (window, algorithm) cell")
    stage("explain", "rank features with Kernel SHAP and select the subset")
    stage("attack", "run the evasion attack against every trained model")
    stage("report", "write consolidated CSV tables", config_required=False)
    run = stage("run", "run the whole pipeline")
    run.add_argument("--stage", choices=PIPELINE_STAGES, help="stop after this stage")

    syn = sub.add_parser("synth", help="write a synthetic RR/PVT cohort and an example config")
    syn.add_argument("--out", type=Path, required=True)
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--subjects", type=int, default=14)
    return p


def _load(args):
    overrides = {
        "out": str(args.out.resolve()) if args.out else None,
        "seed": args.seed,
        "workers": args.workers,
    }
    cfg = load_config(args.config, overrides)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    save_resolved_config(cfg, Path(cfg.out) / "config.resolved.json")
    return cfg


def _dispatch(args) -> int:
    if args.command == "synth":
        cohort = make_cohort(args.seed, CohortSpec(n_subjects=args.subjects))
        manifest = write_cohort(cohort, args.out)
        (args.out / "config.yaml").write_text(EXAMPLE_CONFIG, encoding="utf-8")
        print(json.dumps({"manifest": str(manifest), "config": str(args.out / "config.yaml")}))
        return 0
    if args.command == "report":
        if args.out is None and args.config is None:
            raise ConfigInvalid("report needs --out or --config")
        out = args.out if args.out is not None else Path(load_config(args.config).out)
        paths = emit_report(out)
        print(json.dumps({k: str(v) for k, v in paths.items()}, indent=1, sort_keys=True))
        return 0

    cfg = _load(args)
    if args.command == "run":
        status, summary = run_pipeline(cfg, args.stage)
        if summary is not None:
            ok = sum(c["status"] == "ok" for c in summary["cells"])
            print(json.dumps({"out": cfg.out, "cells": len(summary["cells"]), "ok": ok}))
        return status
    if args.command == "features":
        stage_features(cfg)
    elif args.command == "label":
        stage_label(cfg)
    elif args.command == "split":
        stage_split(cfg)
    elif args.command == "train":
        results = stage_train(cfg, "full31")
        if cfg.feature_mode == "selected" and (Path(cfg.out) / "selection.json").is_file():
            results += stage_train(cfg, "selected")
        if results and all(r != "ok" for r in results):
            return 3
    elif args.command == "explain":
        stage_explain(cfg)
        if cfg.feature_mode == "selected":
            stage_train(cfg, "selected")
    elif args.command == "attack":
        stage_attack(cfg)
        summary = write_summary(cfg)
        if not any(c["status"] == "ok" for c in summary["cells"]):
            return 3
    return 0


def _exit_code(err: DrowsyHrvError) -> int:
    if isinstance(err, ConfigInvalid):
        return 1
    if isinstance(err, (InputMissing, ArtifactMissing)):
        return 2
    return 3


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr,
    )
    try:
        return _dispatch(args)
    except DrowsyHrvError as err:
        code = _exit_code(err)
        print(json.dumps({"error": type(err).__name__, "message": str(err), "exit_status": code}), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
