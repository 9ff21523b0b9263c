"""Flat CSV tables from a finished run, ready for external plotting."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import ArtifactMissing


def _write_csv(path: Path, header: list[str], rows) -> int:
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
            n += 1
    return n


def emit_report(out_dir: str | Path) -> dict[str, Path]:
    """Write ``reports/`` under ``out_dir``: metrics, rankings, selection and
    one trajectory table per (cell, training mode). Returns the written paths."""
    out = Path(out_dir)
    summary_path = out / "summary.json"
    if not summary_path.is_file():
        raise ArtifactMissing(f"no summary.json in {out}; run the pipeline first")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    done = [c for c in summary["cells"] if c["status"] == "ok"]
    if not done:
        raise ArtifactMissing(f"{out} holds no completed cell")
    modes = summary["training_modes"]
    rep = out / "reports"
    (rep / "trajectories").mkdir(parents=True, exist_ok=True)
    paths = {}

    header = ["window", "algorithm", "feature_set", "best_params"]
    for mode in modes:
        header += [f"{mode}_clean_macro_f1", f"{mode}_attacked_macro_f1", f"{mode}_fooled_fraction",
                   f"{mode}_iterations"]
    rows = []
    for c in done:
        row = [c["window"], c["algorithm"], c["feature_set"], json.dumps(c["best_params"], sort_keys=True)]
        for mode in modes:
            m = c["modes"].get(mode, {})
            row += [m.get("clean_macro_f1", ""), m.get("attacked_macro_f1", ""),
                    m.get("fooled_fraction", ""), m.get("iterations", "")]
        rows.append(row)
    paths["metrics"] = rep / "metrics.csv"
    _write_csv(paths["metrics"], header, rows)

    ranking_rows = []
    for c in done:
        rpath = out / "cells" / f"w{c['window']}_{c['algorithm']}_{c['feature_set']}" / "ranking.json"
        if rpath.is_file():
            feats = json.loads(rpath.read_text(encoding="utf-8"))["features"]
            ranking_rows += [[c["window"], c["algorithm"], k + 1, f["name"], f["score"]] for k, f in enumerate(feats)]
    paths["rankings"] = rep / "rankings.csv"
    _write_csv(paths["rankings"], ["window", "algorithm", "rank", "feature", "mean_abs_shap"], ranking_rows)

    sel = summary.get("selection")
    sel_rows = []
    if sel and sel["policy"] == "once":
        sel_rows = [["all", k + 1, f] for k, f in enumerate(sel["features"])]
    elif sel:
        sel_rows = [[w, k + 1, f] for w, feats in sorted(sel["by_window"].items(), key=lambda kv: int(kv[0]))
                    for k, f in enumerate(feats)]
    paths["selection"] = rep / "selection.csv"
    _write_csv(paths["selection"], ["window", "order", "feature"], sel_rows)

    for c in done:
        cid = f"w{c['window']}_{c['algorithm']}_{c['feature_set']}"
        for mode in modes:
            src = out / "cells" / cid / mode / "trajectory.csv"
            if src.is_file():
                dst = rep / "trajectories" / f"{cid}_{mode}.csv"
                dst.write_text(src.read_text(encoding="utf-8"), encoding="utf-8")
                paths[f"trajectory:{cid}:{mode}"] = dst
    return paths
