import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_rr
from drowsyhrv.errors import DegenerateSeries, DegenerateSpectrum, SignalTooShort, TooFewBeats
from drowsyhrv.hrv import (
    FEATURE_NAMES,
    RRSeries,
    SpectralConfig,
    WindowSpec,
    band_features,
    compute_dfa_alpha1,
    compute_feature_vector,
    compute_poincare,
    compute_time_features,
    resample_tachogram,
    segment_windows,
    welch_psd,
    window_count,
)
from drowsyhrv.hrv.features import HrvFeatureVector
from drowsyhrv.errors import DegenerateGeometry
from oracles import dfa_ref, pink_noise, poincare_ref, time_features_ref

CFG = SpectralConfig()


# -- windowing ---------------------------------------------------------------

def regular_series(session_s, rr_ms=1000.0):
    n = int(session_s * 1000 // rr_ms)
    return RRSeries(np.full(n, rr_ms), 0.0)


def test_window_offsets_300_120():
    wins = segment_windows(regular_series(300), 300, WindowSpec(120))
    assert len(wins) == 4
    assert [w.start_time_s for w in wins] == [0.0, 60.0, 120.0, 180.0]
    assert all(len(w) == 120 for w in wins)


def test_single_and_empty_windows():
    assert len(segment_windows(regular_series(120), 120, WindowSpec(120))) == 1
    assert segment_windows(regular_series(90), 90, WindowSpec(120)) == []


@pytest.mark.parametrize("w", [59, 211, 100.5])
def test_window_spec_bounds(w):
    with pytest.raises(ValueError):
        WindowSpec(w)


def test_overlap_is_half_window():
    assert WindowSpec(75).overlap_s == 37.5


@settings(max_examples=200, deadline=None)
@given(st.integers(60, 210), st.integers(0, 5000))
def test_window_count_formula(w, extra):
    s = w + extra
    assert window_count(s, w) == (2 * s - w) // w


def test_consecutive_windows_share_overlap_beats(rng):
    rr = random_rr(rng, n=700)
    series = RRSeries(rr, 0.0)
    times = series.beat_times_s
    w = 90
    wins = segment_windows(series, times[-1] + 0.5, WindowSpec(w))
    for k, (a, b) in enumerate(zip(wins, wins[1:])):
        lo_b, hi_a = (k + 1) * w / 2, k * w / 2 + w
        shared = rr[(times >= lo_b) & (times < hi_a)]
        assert shared.size > 0
        assert np.array_equal(a.intervals_ms[-shared.size:], shared)
        assert np.array_equal(b.intervals_ms[: shared.size], shared)
        assert len(a) + len(b) - shared.size == np.count_nonzero(
            (times >= k * w / 2) & (times < lo_b + w)
        )


# -- time domain -------------------------------------------------------------

def test_time_constant_series():
    f = compute_time_features(RRSeries([1000.0, 1000.0, 1000.0]))
    assert f["hr_mean"] == 60.0
    assert f["sdnn"] == 0.0 and f["rmssd"] == 0.0 and f["nn50"] == 0


def test_time_hand_example():
    f = compute_time_features(RRSeries([800.0, 810.0, 790.0, 800.0]))
    assert f["sdnn"] == pytest.approx(math.sqrt(50), abs=1e-12)
    assert f["rmssd"] == pytest.approx(math.sqrt(200), abs=1e-12)
    assert f["sdsd"] == pytest.approx(math.sqrt(200), abs=1e-12)


def test_nn_counts_strict_threshold():
    f = compute_time_features(RRSeries([800.0, 830.0, 890.0]))
    assert (f["nn20"], f["pnn20"], f["nn50"], f["pnn50"]) == (2, 100.0, 1, 50.0)
    g = compute_time_features(RRSeries([800.0, 820.0, 870.0]))
    assert g["nn20"] == 1 and g["nn50"] == 0


def test_too_few_beats():
    with pytest.raises(TooFewBeats):
        compute_time_features(RRSeries([800.0, 810.0]))


def test_time_matches_oracle(rng):
    for _ in range(20):
        rr = random_rr(rng, n=int(rng.integers(40, 300)))
        got = compute_time_features(RRSeries(rr))
        ref = time_features_ref(rr)
        for k, v in ref.items():
            assert got[k] == pytest.approx(v, rel=1e-9, abs=1e-9), k


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(300, 2000), min_size=3, max_size=60))
def test_time_identities(rr):
    s = RRSeries(rr)
    f = compute_time_features(s)
    d = np.diff(s.intervals_ms)
    assert f["rmssd"] ** 2 == pytest.approx(f["sdsd"] ** 2 + d.mean() ** 2, rel=1e-9, abs=1e-9)
    assert f["hr_min"] <= f["hr_mean"] <= f["hr_max"]
    assert f["nn20"] >= f["nn50"] and f["pnn20"] >= f["pnn50"]
    r = compute_time_features(s.reversed())
    for k in ("sdnn", "rmssd", "nn20", "nn50", "sdsd"):
        assert r[k] == pytest.approx(f[k], rel=1e-9, abs=1e-9)


# -- Poincare ----------------------------------------------------------------

def test_poincare_constant():
    p = compute_poincare(RRSeries([900.0] * 10))
    assert p.sd1 == 0 and p.sd2 == 0 and p.ratio is None


def test_poincare_hand_example():
    p = compute_poincare(RRSeries([800.0, 810.0, 790.0, 800.0]))
    assert p.sd1 == pytest.approx(10.0, abs=1e-12)
    assert p.sd2 == 0.0


def test_poincare_oracle(rng):
    for _ in range(20):
        rr = random_rr(rng, n=int(rng.integers(10, 200)))
        p = compute_poincare(RRSeries(rr))
        sd1_ref, _ = poincare_ref(rr)
        sdnn = statistics.pstdev(rr.tolist())
        sdsd = statistics.pstdev(np.diff(rr).tolist())
        assert p.sd1 == pytest.approx(sd1_ref, rel=1e-9)
        assert p.sd1 == pytest.approx(sdsd / math.sqrt(2), rel=1e-9)
        assert p.sd2 == pytest.approx(math.sqrt(max(2 * sdnn**2 - 0.5 * sdsd**2, 0)), rel=1e-9)
        assert p.ratio == pytest.approx(p.sd2 / p.sd1, rel=1e-12)


# -- DFA ---------------------------------------------------------------------

def test_dfa_matches_box_by_box_oracle(rng):
    for _ in range(5):
        rr = random_rr(rng, n=int(rng.integers(32, 400)))
        assert compute_dfa_alpha1(RRSeries(rr)) == pytest.approx(dfa_ref(rr), abs=1e-9)


def test_dfa_white_noise():
    alphas = [
        compute_dfa_alpha1(RRSeries(800 + 50 * np.random.default_rng(s).standard_normal(10000)))
        for s in range(20)
    ]
    inside = sum(0.4 <= a <= 0.6 for a in alphas)
    assert inside >= 18


def test_dfa_pink_noise():
    for s in range(5):
        rr = 800 + 50 * pink_noise(10000, np.random.default_rng(s))
        assert compute_dfa_alpha1(RRSeries(rr)) == pytest.approx(1.0, abs=0.15)


def test_dfa_errors():
    with pytest.raises(DegenerateSeries):
        compute_dfa_alpha1(RRSeries([800.0] * 64))
    with pytest.raises(TooFewBeats):
        compute_dfa_alpha1(RRSeries([800.0, 810.0] * 15))


# -- spectral ----------------------------------------------------------------

def test_resample_constant_series():
    x = resample_tachogram(RRSeries([1000.0] * 4), CFG)
    assert x.size == 12 and np.all(x == 0)


def test_resampled_length(rng):
    s = RRSeries(random_rr(rng, n=120))
    assert resample_tachogram(s, CFG).size == math.floor(s.duration_s * 4.0)


def test_resample_keeps_modulation_frequency():
    # RR modulated at 0.1 Hz in time: build beats iteratively
    t, rr = 0.0, []
    while t < 300:
        v = 1000 + 50 * math.sin(2 * math.pi * 0.1 * t)
        rr.append(v)
        t += v / 1000
    x = resample_tachogram(RRSeries(rr), CFG)
    spec = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, d=0.25)
    assert freqs[np.argmax(spec)] == pytest.approx(0.1, abs=1.5 / (x.size * 0.25))


def test_resample_too_few():
    with pytest.raises(TooFewBeats):
        resample_tachogram(RRSeries([800.0, 800.0, 800.0]), CFG)


def test_welch_zero_and_short():
    f, p = welch_psd(np.zeros(64), CFG)
    assert np.all(p == 0)
    with pytest.raises(SignalTooShort):
        welch_psd(np.zeros(7), CFG)


@pytest.mark.parametrize("f0", [0.03, 0.10, 0.30])
@pytest.mark.parametrize("n", [512, 1024])
def test_welch_tone_peak(f0, n):
    t = np.arange(n) / 4.0
    f, p = welch_psd(np.sin(2 * np.pi * f0 * t), CFG)
    assert abs(f[np.argmax(p)] - f0) <= f[1] - f[0]


def test_welch_parseval_white_noise():
    for s in range(20):
        x = np.random.default_rng(s).standard_normal(1024)
        f, p = welch_psd(x, CFG)
        assert abs(p.sum() * (f[1] - f[0]) / x.var() - 1) < 0.05


def test_flat_psd_relative_power():
    f = np.linspace(0, 2, 4097)
    out = band_features(f, np.full_like(f, 3.0), CFG)
    assert out["vlf_relative_power"] == pytest.approx(10.0, abs=1e-9)
    assert out["lf_relative_power"] == pytest.approx(27.5, abs=1e-9)
    assert out["hf_relative_power"] == pytest.approx(62.5, abs=1e-9)
    assert out["vlf_absolute_power"] == pytest.approx(0.12, abs=1e-12)
    assert out["vlf_logarithmic_power"] == pytest.approx(math.log(0.12), abs=1e-12)


def test_band_zero_power_is_degenerate():
    f = np.linspace(0, 2, 4097)
    p = np.where(f < 0.1, 1.0, 0.0)
    with pytest.raises(DegenerateSpectrum):
        band_features(f, p, CFG)
    with pytest.raises(DegenerateSpectrum):
        band_features(f, np.zeros_like(f), CFG)


def test_hf_tone_features():
    t, rr = 0.0, []
    rng = np.random.default_rng(0)
    while t < 240:
        v = 900 + 40 * math.sin(2 * math.pi * 0.3 * t) + rng.normal(0, 1)
        rr.append(v)
        t += v / 1000
    from drowsyhrv.hrv import compute_frequency_features
    out = compute_frequency_features(RRSeries(rr), CFG)
    assert abs(out["hf_peak_frequency"] - 0.3) <= 4.0 / 4096 + 0.01
    assert out["lf_hf_ratio"] < 1


def test_relative_powers_sum_property(rng):
    for _ in range(200):
        s = RRSeries(random_rr(rng, n=int(rng.integers(60, 250))))
        out = compute_feature_vector(s, CFG)
        rel = out["vlf_relative_power"] + out["lf_relative_power"] + out["hf_relative_power"]
        assert rel == pytest.approx(100.0, abs=1e-9)
        assert out["lf_normalized"] + out["hf_normalized"] == pytest.approx(100.0, abs=1e-9)
        assert out["hr_min"] <= out["hr_mean"] <= out["hr_max"]
        assert all(out[k] >= 0 for k in out if k.endswith("absolute_power") or k == "total_power")


# -- assembled vector --------------------------------------------------------

def test_feature_vector_shape_and_determinism(rng):
    s = RRSeries(random_rr(rng))
    a = compute_feature_vector(s, CFG)
    b = compute_feature_vector(s, CFG)
    assert len(a) == 31 and tuple(a) == FEATURE_NAMES
    assert np.array_equal(a.as_array(), b.as_array())
    assert a.domain("sd1") == "nonlinear" and a.domain("lf_hf_ratio") == "frequency"


def test_feature_vector_tags_failing_group():
    # a constant series fails in the spectrum first
    with pytest.raises(DegenerateSpectrum) as info:
        compute_feature_vector(RRSeries([900.0] * 100), CFG)
    assert info.value.group == "frequency"
    with pytest.raises(TooFewBeats) as info:
        compute_feature_vector(RRSeries([900.0, 910.0]), CFG)
    assert info.value.group == "time"


def test_constant_differences_fail_poincare_ratio():
    ramp = RRSeries(np.arange(800.0, 1100.0, 2.0))
    with pytest.raises(DegenerateGeometry) as info:
        compute_feature_vector(ramp, CFG)
    assert info.value.group == "nonlinear"


def test_hrv_vector_rejects_bad_keys():
    with pytest.raises(ValueError):
        HrvFeatureVector({"hr_mean": 1.0})
