"""Synthetic RR and PVT cohorts for tests, demos and the acceptance matrix.

Drowsy sessions get a longer mean RR, weaker LF and stronger, slower
respiratory (HF) modulation. Every parameter is drawn per subject or per
window-scale segment from overlapping Gaussians, so the classes are
separable only statistically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset.labeling import PvtSession, SessionLabel, label_subjects, write_pvt_file
from .dataset.table import LabeledDataset, SessionRecording
from .hrv.features import FEATURE_NAMES
from .hrv.series import RRSeries, write_rr_file


@dataclass(frozen=True)
class CohortSpec:
    n_subjects: int = 14
    session_length_s: float = 600.0
    n_reactions: int = 60
    # probability that session 2 / session 3 is truly drowsy
    drowsy_prob: tuple[float, float] = (0.35, 0.75)
    # scales the physiological gap between awake and drowsy sessions
    separation: float = 1.0


def _slow_walk(rng, n, step, lo, hi, start):
    x = start + np.cumsum(rng.normal(0.0, step, n))
    return np.clip(x, lo, hi)


def synth_rr(rng: np.random.Generator, duration_s: float, mean_rr: float, lf_amp: float,
             hf_amp: float, resp_hz: float, noise_ms: float = 6.0) -> RRSeries:
    """Beat-by-beat RR series with LF (~0.1 Hz) and respiratory modulation."""
    fs = 4.0
    n = int(duration_s * fs) + 64
    t = np.arange(n) / fs
    lf_env = lf_amp * _slow_walk(rng, n, 0.01, 0.4, 1.6, 1.0)
    hf_env = hf_amp * _slow_walk(rng, n, 0.01, 0.4, 1.6, 1.0)
    resp = np.clip(resp_hz + np.cumsum(rng.normal(0.0, 0.0008, n)), 0.16, 0.38)
    lf_freq = np.clip(0.095 + np.cumsum(rng.normal(0.0, 0.0005, n)), 0.06, 0.14)
    lf_phase = 2 * np.pi * np.cumsum(lf_freq) / fs + rng.uniform(0, 2 * np.pi)
    hf_phase = 2 * np.pi * np.cumsum(resp) / fs + rng.uniform(0, 2 * np.pi)
    vlf = _slow_walk(rng, n, 0.6, -60.0, 60.0, 0.0)
    drift = vlf - np.convolve(vlf, np.ones(240) / 240, mode="same")
    mod = mean_rr + lf_env * np.sin(lf_phase) + hf_env * np.sin(hf_phase) + 0.5 * drift
    rr, now = [], 0.0
    while now < duration_s:
        v = float(np.interp(now, t, mod)) + rng.normal(0.0, noise_ms)
        v = min(max(v, 400.0), 1600.0)
        rr.append(v)
        now += v / 1000.0
    return RRSeries(np.asarray(rr), 0.0)


def synth_pvt(rng: np.random.Generator, subject_id: str, session_index: int, drowsy: bool,
              base_mean: float, base_sd: float, n: int) -> PvtSession:
    rt = rng.normal(base_mean, base_sd, n)
    if session_index > 1:
        lapse_frac = rng.uniform(0.6, 0.9) if drowsy else rng.uniform(0.0, 0.3)
        lapses = rng.random(n) < lapse_frac
        rt[lapses] = base_mean + rng.uniform(3.5, 10.0, lapses.sum()) * base_sd
    return PvtSession(subject_id, session_index, np.clip(rt, 100.0, None))


@dataclass
class Cohort:
    recordings: list[SessionRecording]
    pvt: list[PvtSession]
    truth: dict[tuple[str, int], bool]


def make_cohort(seed: int = 0, spec: CohortSpec = CohortSpec()) -> Cohort:
    """Subjects x 3 sessions, labeled from their synthetic PVT runs."""
    rng = np.random.default_rng(seed)
    sep = spec.separation
    pvt, series, truth = [], {}, {}
    for s in range(spec.n_subjects):
        sid = f"S{s + 1:02d}"
        base_rr = rng.normal(820.0, 70.0)
        base_lf = rng.normal(28.0, 6.0)
        base_hf = rng.normal(20.0, 5.0)
        base_resp = rng.uniform(0.22, 0.30)
        rt_mean, rt_sd = rng.normal(280.0, 20.0), rng.uniform(18.0, 30.0)
        for idx in (1, 2, 3):
            drowsy = idx > 1 and rng.random() < spec.drowsy_prob[idx - 2]
            truth[(sid, idx)] = drowsy
            shift = sep if drowsy else 0.0
            series[(sid, idx)] = synth_rr(
                rng, spec.session_length_s,
                mean_rr=base_rr + rng.normal(45.0 * shift, 35.0),
                lf_amp=max(base_lf * (1.0 - 0.25 * shift) + rng.normal(0, 4.0), 4.0),
                hf_amp=max(base_hf * (1.0 + 0.45 * shift) + rng.normal(0, 4.0), 4.0),
                resp_hz=base_resp - 0.03 * shift + rng.normal(0, 0.015),
            )
            pvt.append(synth_pvt(rng, sid, idx, drowsy, rt_mean, rt_sd, spec.n_reactions))
    labels = label_subjects(pvt)
    recs = [
        SessionRecording(sid, idx, series[(sid, idx)], spec.session_length_s, labels[(sid, idx)])
        for (sid, idx) in sorted(series)
    ]
    return Cohort(recs, pvt, truth)


def write_cohort(cohort: Cohort, directory: str | Path) -> Path:
    """Write RR/PVT files plus the JSON manifest the CLI reads. Returns the manifest path."""
    root = Path(directory)
    (root / "rr").mkdir(parents=True, exist_ok=True)
    (root / "pvt").mkdir(parents=True, exist_ok=True)
    pvt_by_key = {(p.subject_id, p.session_index): p for p in cohort.pvt}
    entries = []
    for rec in cohort.recordings:
        stem = f"{rec.subject_id}_s{rec.session_index}"
        write_rr_file(root / "rr" / f"{stem}.csv", rec.series)
        write_pvt_file(root / "pvt" / f"{stem}.csv", pvt_by_key[(rec.subject_id, rec.session_index)])
        entries.append({
            "subject_id": rec.subject_id,
            "session_index": rec.session_index,
            "session_length_s": rec.session_length_s,
            "rr_path": f"rr/{stem}.csv",
            "pvt_path": f"pvt/{stem}.csv",
        })
    manifest = root / "manifest.json"
    manifest.write_text(json.dumps({"sessions": entries}, indent=1) + "\n", encoding="utf-8")
    return manifest


def label_counts(cohort: Cohort) -> dict[str, int]:
    out = {"awake": 0, "drowsy": 0}
    for rec in cohort.recordings:
        out["drowsy" if rec.label == SessionLabel.DROWSY else "awake"] += 1
    return out


def make_feature_table(seed: int = 0, n_rows: int = 1000, drowsy_frac: float = 0.35,
                       separation: float = 1.0, window_s: int = 120) -> LabeledDataset:
    """HRV-like feature rows drawn from overlapping class-conditional Gaussians.

    Latent quantities (mean RR, variability, band powers, ...) are Gaussian or
    log-Gaussian per class; every derived feature is then computed from them
    exactly as the extractor would (pNNxx from NNxx and the difference count,
    relative and normalized powers from absolute ones, SD1/SD2 from SDSD and
    SDNN), so the adversarial constraint rules hold on every row.
    """
    rng = np.random.default_rng(seed)
    n = n_rows
    c = (rng.random(n) < drowsy_frac).astype(np.int64)
    s = separation * c
    def lognorm(mu, sd):
        return np.exp(rng.normal(mu, sd, n))

    mean_rr = rng.normal(820.0 + 45.0 * s, 75.0, n)
    hr_mean = 60000.0 / mean_rr
    hr_std = lognorm(np.log(4.0) + 0.1 * s, 0.3)
    hr_min = hr_mean - hr_std * rng.uniform(1.5, 3.0, n)
    hr_max = hr_mean + hr_std * rng.uniform(1.5, 3.0, n)
    sdnn = lognorm(np.log(50.0) + 0.12 * s, 0.3)
    rmssd = lognorm(np.log(35.0) + 0.25 * s, 0.35)
    sdsd = np.minimum(rmssd * rng.uniform(0.97, 1.0, n), 1.9 * sdnn)
    diff_count = np.maximum((window_s * 1000.0 / mean_rr).astype(np.int64) - 1, 10)
    nn20 = rng.binomial(diff_count, np.clip(rng.normal(0.35 + 0.12 * s, 0.12, n), 0.02, 0.95)).astype(float)
    nn50 = rng.binomial(nn20.astype(np.int64), np.clip(rng.normal(0.3 + 0.08 * s, 0.1, n), 0.01, 0.9)).astype(float)
    powers = {
        "vlf": lognorm(np.log(800.0), 0.5),
        "lf": lognorm(np.log(1200.0) - 0.35 * s, 0.5),
        "hf": lognorm(np.log(600.0) + 0.45 * s, 0.5),
    }
    peaks = {
        "vlf": rng.uniform(0.0, 0.04, n),
        "lf": np.clip(rng.normal(0.1, 0.02, n), 0.04, 0.149),
        "hf": np.clip(rng.normal(0.27 - 0.03 * s, 0.04, n), 0.15, 0.399),
    }
    total = powers["vlf"] + powers["lf"] + powers["hf"]
    lf, hf = powers["lf"], powers["hf"]
    sd1 = sdsd / np.sqrt(2.0)
    sd2 = np.sqrt(2.0 * sdnn**2 - 0.5 * sdsd**2)
    cols = {
        "hr_mean": hr_mean, "hr_std": hr_std, "hr_min": hr_min, "hr_max": hr_max,
        "sdsd": sdsd, "rmssd": rmssd, "nn20": nn20, "pnn20": 100.0 * nn20 / diff_count,
        "nn50": nn50, "pnn50": 100.0 * nn50 / diff_count, "sdnn": sdnn,
        "total_power": total, "lf_normalized": 100.0 * lf / (lf + hf),
        "hf_normalized": 100.0 * hf / (lf + hf), "lf_hf_ratio": lf / hf,
        "dfa_alpha1": rng.normal(1.1 - 0.1 * s, 0.2, n), "sd1": sd1, "sd2": sd2, "sd2_sd1_ratio": sd2 / sd1,
    }
    for band in ("vlf", "lf", "hf"):
        cols[f"{band}_peak_frequency"] = peaks[band]
        cols[f"{band}_absolute_power"] = powers[band]
        cols[f"{band}_relative_power"] = 100.0 * powers[band] / total
        cols[f"{band}_logarithmic_power"] = np.log(powers[band])
    X = np.column_stack([cols[name] for name in FEATURE_NAMES])
    return LabeledDataset(
        X, c, FEATURE_NAMES,
        subject_id=np.array([f"G{seed}"] * n, dtype=object),
        window_index=np.arange(n), window_size=np.full(n, window_s), diff_count=diff_count,
    )
