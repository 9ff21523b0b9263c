import csv
import json

import pytest
import yaml

from drowsyhrv.cli import main
from drowsyhrv.config import config_from_dict, load_config
from drowsyhrv.errors import ArtifactMissing, ConfigInvalid
from drowsyhrv.models import load_model
from drowsyhrv.report import emit_report
from drowsyhrv.synthetic import CohortSpec, make_cohort, write_cohort

FAST_GRIDS = {
    "svm": {"C": [10], "gamma": [0.1]},
    "knn": {"k": [5]},
    "xgb": {"n_trees": [20], "max_depth": [3]},
    "lgbm": {"n_trees": [20], "max_leaves": [7]},
}


@pytest.fixture(scope="module")
def cohort_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cohort")
    write_cohort(make_cohort(0, CohortSpec(n_subjects=6)), root)
    return root


def write_config(root, name, **extra):
    doc = {
        "manifest": "manifest.json", "out": f"out_{name}", "seed": 0, "windows": [120],
        "algorithms": ["knn"], "grids": FAST_GRIDS, "training_mode": "both",
        "shap": {"background": 10, "budget": 256, "eval_rows": 4},
    }
    doc.update(extra)
    path = root / f"{name}.yaml"
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


def summary_of(root, name):
    return json.loads((root / f"out_{name}" / "summary.json").read_text())


def test_single_cell_run(cohort_dir):
    cfg = write_config(cohort_dir, "single")
    assert main(["run", "--config", str(cfg)]) == 0
    s = summary_of(cohort_dir, "single")
    assert len(s["cells"]) == 1
    cell = s["cells"][0]
    assert (cell["window"], cell["algorithm"], cell["status"]) == (120, "knn", "ok")
    # mode "both": one attacked trajectory per training mode
    assert set(cell["modes"]) == {"regular", "adversarial"}
    for m in cell["modes"].values():
        assert len(m["trajectory"]) == m["iterations"] + 1 <= 31
        assert m["trajectory"][0] == m["clean_macro_f1"]
    out = cohort_dir / "out_single"
    resolved = json.loads((out / "config.resolved.json").read_text())
    assert resolved["windows"] == [120] and resolved["attack"]["max_iter"] == 30


def test_run_is_deterministic(cohort_dir):
    a = write_config(cohort_dir, "det_a", algorithms=["knn", "xgb"])
    b = write_config(cohort_dir, "det_b", algorithms=["knn", "xgb"], workers=2)
    assert main(["run", "--config", str(a)]) == 0
    assert main(["run", "--config", str(b)]) == 0
    ta = (cohort_dir / "out_det_a" / "summary.json").read_bytes()
    tb = (cohort_dir / "out_det_b" / "summary.json").read_bytes()
    assert ta == tb


def test_staged_subcommands_match_run(cohort_dir):
    cfg = write_config(cohort_dir, "staged")
    for stage in ("features", "label", "split", "train", "explain", "attack", "report"):
        assert main([stage, "--config", str(cfg)]) == 0, stage
    ref = write_config(cohort_dir, "staged_ref")
    assert main(["run", "--config", str(ref)]) == 0
    assert summary_of(cohort_dir, "staged") == summary_of(cohort_dir, "staged_ref")
    assert (cohort_dir / "out_staged" / "reports" / "metrics.csv").is_file()


def test_stop_after_stage(cohort_dir):
    cfg = write_config(cohort_dir, "partial")
    assert main(["run", "--config", str(cfg), "--stage", "split"]) == 0
    out = cohort_dir / "out_partial"
    assert (out / "windows" / "w120" / "split.json").is_file()
    assert not (out / "cells").exists() and not (out / "summary.json").exists()


def test_selected_feature_mode(cohort_dir):
    cfg = write_config(cohort_dir, "sel", algorithms=["knn", "xgb"], feature_mode="selected",
                       selection={"target": 6, "policy": "once"})
    assert main(["run", "--config", str(cfg)]) == 0
    s = summary_of(cohort_dir, "sel")
    assert len(s["selection"]["features"]) == 6
    sets = sorted((c["algorithm"], c["feature_set"]) for c in s["cells"])
    assert sets == [("knn", "full31"), ("knn", "selected"), ("xgb", "full31"), ("xgb", "selected")]
    model, names = load_model(cohort_dir / "out_sel" / "cells" / "w120_xgb_selected" / "regular" / "model.json")
    assert model.n_features_ == 6 and names == s["selection"]["features"]


def test_failing_cell_is_isolated(cohort_dir):
    grids = dict(FAST_GRIDS, knn={"k": [100000]})
    cfg = write_config(cohort_dir, "iso", algorithms=["knn", "xgb"], grids=grids)
    assert main(["run", "--config", str(cfg)]) == 0
    cells = {c["algorithm"]: c for c in summary_of(cohort_dir, "iso")["cells"]}
    assert cells["knn"]["status"] == "failed" and "error" in cells["knn"]
    assert cells["xgb"]["status"] == "ok"
    rows = list(csv.reader(open(cohort_dir / "out_iso" / "reports" / "metrics.csv")))
    assert len(rows) == 2  # header + the one completed cell


def test_all_cells_failing_exits_3(cohort_dir, capsys):
    cfg = write_config(cohort_dir, "allfail", grids=dict(FAST_GRIDS, knn={"k": [100000]}))
    assert main(["run", "--config", str(cfg)]) == 3


def test_exit_codes(cohort_dir, tmp_path, capsys):
    bad = write_config(cohort_dir, "bad", windows=[30])
    assert main(["run", "--config", str(bad)]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigInvalid" and err["exit_status"] == 1
    missing = write_config(cohort_dir, "missing", manifest="nope.json")
    assert main(["run", "--config", str(missing)]) == 2
    assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == 2
    assert main(["report", "--out", str(tmp_path)]) == 2


def test_report_tables(cohort_dir):
    cfg = write_config(cohort_dir, "rep")
    assert main(["run", "--config", str(cfg)]) == 0
    out = cohort_dir / "out_rep"
    paths = emit_report(out)
    rows = list(csv.reader(open(paths["metrics"])))
    assert len(rows) == 2
    attack = json.loads((out / "cells" / "w120_knn_full31" / "regular" / "attack.json").read_text())
    traj = list(csv.reader(open(paths["trajectory:w120_knn_full31:regular"])))
    assert len(traj) == len(attack["metrics"]) + 1
    ranks = list(csv.reader(open(paths["rankings"])))
    assert len(ranks) == 1 + 31
    with pytest.raises(ArtifactMissing):
        emit_report(cohort_dir / "nowhere")


def test_config_validation(tmp_path):
    base = {"manifest": "m.json", "seed": 1}
    cfg = config_from_dict(base, tmp_path)
    assert cfg.windows == (60, 90, 120, 150, 180, 210) and cfg.training_mode == "both"
    for bad in ({"windows": [45]}, {"algorithms": []}, {"algorithms": ["rf"]}, {"training_mode": "x"},
                {"feature_mode": "y"}, {"seed": "now"}, {"unknown": 1}, {"spectral": {"resample_hz": -1}},
                {"selection": {"policy": "sometimes"}}, {"attack": {"max_iter": 31}}):
        with pytest.raises(ConfigInvalid):
            config_from_dict({**base, **bad}, tmp_path)
    with pytest.raises(ConfigInvalid):
        config_from_dict({"manifest": "m.json"}, tmp_path)
    p = tmp_path / "c.yaml"
    p.write_text("manifest: m.json\nseed: 2\n")
    assert load_config(p, {"seed": 5}).seed == 5


def test_synth_command(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "demo"), "--subjects", "3"]) == 0
    assert (tmp_path / "demo" / "manifest.json").is_file()
    cfg = load_config(tmp_path / "demo" / "config.yaml")
    assert cfg.manifest.endswith("manifest.json")
