"""Detector checks on hand-built contours where the right answer is countable."""

import numpy as np
import pytest

from cryscreen.biomarkers import (
    CRY_FEATURE_NAMES,
    MELODY_TYPES,
    UnitFlags,
    aggregate_biomarkers,
    classify_melody,
    detect_dysphonation,
    detect_glide,
    detect_hyperphonation,
    detect_vibrato,
    durational_features,
    smooth_f0,
    unit_biomarker_flags,
)
from cryscreen.dsp import F0Contour, FrameGrid, FrameSeries
from cryscreen.segmenter import CrySegmentation

HOP = 0.010


def grid_of(n):
    return FrameGrid(HOP, 0.025, n, 16000)


def contour(f0_values, voiced=None):
    f0 = np.asarray(f0_values, dtype=np.float64)
    if voiced is None:
        voiced = f0 > 0
    voiced = np.asarray(voiced, dtype=bool)
    return F0Contour(np.where(voiced, f0, 0.0), voiced, voiced.astype(float), grid_of(len(f0)))


def series(values):
    return FrameSeries(np.asarray(values, dtype=np.float64), grid_of(len(values)))


def test_smooth_f0_kills_lone_spike():
    f0 = contour([100.0] * 5 + [500.0] + [100.0] * 5)
    assert np.all(smooth_f0(f0) == 100.0)


def test_smooth_f0_skips_unvoiced_neighbors():
    f0 = contour([0.0, 400.0, 500.0], voiced=[False, True, True])
    out = smooth_f0(f0)
    assert out[0] == 0.0
    assert out[1] == pytest.approx(450.0)
    assert out[2] == pytest.approx(450.0)


def run_contour(base, hi, start, length, n=60):
    vals = np.full(n, base)
    vals[start : start + length] = hi
    return contour(vals)


def test_hyperphonation_counts_sustained_run():
    f0 = run_contour(900.0, 1200.0, 20, 15)
    mask = detect_hyperphonation(f0, (0.0, 0.6))
    assert mask.sum() == 15
    assert np.flatnonzero(mask).tolist() == list(range(20, 35))


def test_hyperphonation_min_run_boundary():
    # 0.1 s at a 10 ms hop is exactly 10 frames: 10 counts, 9 does not
    ok = detect_hyperphonation(run_contour(900.0, 1200.0, 20, 10), (0.0, 0.6))
    assert ok.sum() == 10
    short = detect_hyperphonation(run_contour(900.0, 1200.0, 20, 9), (0.0, 0.6))
    assert short.sum() == 0


def test_hyperphonation_threshold_strict():
    f0 = run_contour(900.0, 1000.0, 20, 15)  # exactly at the bar
    assert detect_hyperphonation(f0, (0.0, 0.6)).sum() == 0


def test_hyperphonation_needs_voicing():
    vals = np.full(60, 900.0)
    vals[20:35] = 1200.0
    voiced = np.ones(60, dtype=bool)
    voiced[20:35] = False
    f0 = contour(vals, voiced)
    assert detect_hyperphonation(f0, (0.0, 0.6)).sum() == 0


def test_hyperphonation_respects_unit_bounds():
    f0 = run_contour(900.0, 1200.0, 20, 15)
    assert detect_hyperphonation(f0, (0.0, 0.22)).sum() == 0


def test_dysphonation_counts_run():
    flat = np.full(60, 0.10)
    flat[10:25] = 0.50
    mask = detect_dysphonation(series(flat), (0.0, 0.6))
    assert np.flatnonzero(mask).tolist() == list(range(10, 25))


def test_dysphonation_median_bridges_single_dip():
    # one frame dipping under the bar must not break a sustained run
    flat = np.full(60, 0.10)
    flat[10:32] = 0.45
    flat[17] = 0.29
    mask = detect_dysphonation(series(flat), (0.0, 0.6))
    assert mask.sum() == 22


def test_dysphonation_median_removes_lone_spike():
    flat = np.full(60, 0.10)
    flat[30] = 0.90
    flat[40:49] = 0.50  # 9 frames: below the minimum run
    assert detect_dysphonation(series(flat), (0.0, 0.6)).sum() == 0


def test_dysphonation_threshold_strict():
    flat = np.full(60, 0.30)  # exactly at the bar, not above
    assert detect_dysphonation(series(flat), (0.0, 0.6)).sum() == 0


def test_glide_window_of_start_frames():
    vals = np.concatenate([np.full(20, 300.0), np.full(20, 950.0)])
    mask = detect_glide(contour(vals), (0.0, 0.4))
    # every frame within 0.1 s before the jump sees a 650 Hz move
    assert np.flatnonzero(mask).tolist() == list(range(10, 20))


def test_glide_needs_voiced_endpoints():
    vals = np.concatenate([np.full(20, 300.0), np.full(20, 950.0)])
    voiced = np.ones(40, dtype=bool)
    voiced[20:32] = False  # the landing side is too far to reach when unvoiced
    assert detect_glide(contour(vals, voiced), (0.0, 0.4)).sum() == 0


def test_glide_slow_rise_not_flagged():
    vals = np.concatenate([np.full(10, 300.0), np.linspace(300.0, 950.0, 30), np.full(10, 950.0)])
    assert detect_glide(contour(vals), (0.0, 0.5)).sum() == 0


def test_vibrato_modulated_contour():
    t = np.arange(80) * HOP
    vals = 450.0 + 80.0 * np.sin(2 * np.pi * 8.0 * t)
    assert detect_vibrato(contour(vals), (0.0, 0.8))


def test_vibrato_shallow_not_detected():
    t = np.arange(80) * HOP
    vals = 450.0 + 15.0 * np.sin(2 * np.pi * 8.0 * t)
    assert not detect_vibrato(contour(vals), (0.0, 0.8))


def test_vibrato_slow_wobble_not_detected():
    # 2 Hz puts successive extrema 0.25 s apart, far over the spacing cap
    t = np.arange(150) * HOP
    vals = 450.0 + 80.0 * np.sin(2 * np.pi * 2.0 * t)
    assert not detect_vibrato(contour(vals), (0.0, 1.5))


def test_vibrato_needs_four_extrema():
    t = np.arange(20) * HOP  # 1.5 cycles at 8 Hz: three extrema
    vals = 450.0 + 80.0 * np.sin(2 * np.pi * 8.0 * t)
    assert not detect_vibrato(contour(vals), (0.0, 0.2))


def test_melody_five_shapes():
    n = 50
    u = np.linspace(0.0, 1.0, n)
    rising = 400.0 + 200.0 * u
    falling = 600.0 - 200.0 * u
    flat = np.full(n, 500.0)
    tent = 400.0 + 200.0 * (1.0 - np.abs(2.0 * u - 1.0))
    dip = np.interp(u, [0.0, 0.1, 0.5, 1.0], [620.0, 640.0, 400.0, 630.0])
    cases = {
        "rising": rising,
        "falling": falling,
        "flat": flat,
        "rising_falling": tent,
        "falling_rising": dip,
    }
    for want, vals in cases.items():
        got = classify_melody(contour(vals), (0.0, n * HOP))
        assert got == want, f"{want}: got {got}"
    assert set(cases) == set(MELODY_TYPES)


def test_melody_flat_band_is_relative():
    n = 50
    u = np.linspace(0.0, 1.0, n)
    # 7% swing around the mean stays flat; 20% does not
    assert classify_melody(contour(500.0 + 35.0 * u), (0.0, n * HOP)) == "flat"
    assert classify_melody(contour(500.0 + 100.0 * u), (0.0, n * HOP)) == "rising"


def test_melody_edge_fraction_rule():
    n = 51
    u = np.linspace(0.0, 1.0, n)
    late_peak = 400.0 + 200.0 * np.interp(u, [0.0, 0.85, 1.0], [0.0, 1.0, 0.9])
    assert classify_melody(contour(late_peak), (0.0, n * HOP)) == "rising"
    mid_peak = 400.0 + 200.0 * np.interp(u, [0.0, 0.5, 1.0], [0.0, 1.0, 0.9])
    assert classify_melody(contour(mid_peak), (0.0, n * HOP)) == "rising_falling"


def test_melody_too_few_voiced_frames():
    vals = np.array([300.0, 500.0, 700.0, 900.0])
    assert classify_melody(contour(vals), (0.0, 0.04)) == "flat"


def test_melody_degenerate_falls_back_flat():
    # early dip at the very edge with max near the start: no shape rule fits
    vals = np.concatenate([[500.0, 400.0, 400.0], np.full(18, 500.0)])
    assert classify_melody(contour(vals), (0.0, 0.21)) == "flat"


def test_unit_flags_tally_matches_detectors():
    n = 120
    vals = np.full(n, 900.0)
    vals[30:45] = 1200.0
    f0 = contour(vals)
    flat = np.full(n, 0.05)
    flat[60:75] = 0.50
    fs = series(flat)
    unit = (0.0, 1.2)
    flags = unit_biomarker_flags(f0, fs, unit)
    assert flags.num_frames == 120
    assert flags.hyperphonation_frames == 15
    assert flags.dysphonation_frames == 15
    assert flags.glide_frames == int(detect_glide(f0, unit).sum())
    assert flags.vibrato_present == detect_vibrato(f0, unit)
    assert flags.melody == classify_melody(f0, unit)


def test_durational_features_exact():
    seg = CrySegmentation.from_expirations([(0.5, 1.5), (2.0, 2.6), (3.0, 4.4)])
    out = durational_features(seg)
    units = np.array([1.0, 0.6, 1.4])
    pauses = np.array([0.5, 0.4])
    assert out["cry_unit_dur_mean"] == pytest.approx(units.mean())
    assert out["cry_unit_dur_std"] == pytest.approx(units.std())
    assert out["cry_unit_dur_max"] == pytest.approx(1.4)
    assert out["cry_unit_dur_min"] == pytest.approx(0.6)
    assert out["pause_dur_mean"] == pytest.approx(pauses.mean())
    assert out["pause_dur_min"] == pytest.approx(0.4)


def test_durational_features_single_unit():
    out = durational_features(CrySegmentation.from_expirations([(0.5, 1.5)]))
    assert out["pause_dur_mean"] == 0.0
    assert out["pause_dur_std"] == 0.0
    with pytest.raises(ValueError, match="zero cry units"):
        durational_features(CrySegmentation([], []))


def test_aggregate_exact_fractions():
    seg = CrySegmentation.from_expirations([(0.0, 1.0), (1.5, 2.5), (3.0, 4.0), (4.5, 5.5)])
    flags = [
        UnitFlags(num_frames=100, hyperphonation_frames=20, melody="rising"),
        UnitFlags(num_frames=100, dysphonation_frames=30, melody="flat"),
        UnitFlags(num_frames=100, glide_frames=5, vibrato_present=True, melody="flat"),
        UnitFlags(num_frames=100, melody="falling"),
    ]
    vec = aggregate_biomarkers(seg, flags)
    assert set(vec) == set(CRY_FEATURE_NAMES)
    assert vec["hyperphonation_unit_frac"] == 0.25
    assert vec["hyperphonation_dur_frac"] == 20 / 400
    assert vec["dysphonation_unit_frac"] == 0.25
    assert vec["glide_dur_frac"] == 5 / 400
    assert vec["vibrato_unit_frac"] == 0.25
    assert vec["vibrato_dur_frac"] == 100 / 400
    assert vec["melody_flat_unit_frac"] == 0.5
    assert vec["melody_flat_dur_frac"] == 200 / 400
    assert vec["melody_rising_unit_frac"] == 0.25
    melody_sum = sum(vec[f"melody_{m}_unit_frac"] for m in MELODY_TYPES)
    assert melody_sum == pytest.approx(1.0, abs=1e-9)
    fracs = [v for k, v in vec.items() if k.endswith("_frac")]
    assert all(0.0 <= v <= 1.0 for v in fracs)
    assert all(np.isfinite(v) for v in vec.values())


def test_aggregate_validates_lengths():
    seg = CrySegmentation.from_expirations([(0.0, 1.0), (1.5, 2.5)])
    with pytest.raises(ValueError, match="one UnitFlags per cry unit"):
        aggregate_biomarkers(seg, [UnitFlags(num_frames=10)])


def test_feature_name_count():
    assert len(CRY_FEATURE_NAMES) == 26
    assert len(set(CRY_FEATURE_NAMES)) == 26
