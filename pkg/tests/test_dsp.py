"""Oracle checks for the DSP core.

Each block verifies one primitive against a signal whose right answer is
known in closed form: framing counts, tone bins, DCT orthogonality,
planted resonances, exact log-spectral slopes.
"""

import numpy as np
import pytest
from scipy import signal as sps

from cryscreen.audio_io import AudioClip
from cryscreen.dsp import (
    FrameGrid,
    Spectrogram,
    estimate_f0,
    frame_signal,
    log_mel,
    loudness,
    lpc_formants,
    make_grid,
    mel_filterbank,
    mfcc,
    spectral_flatness,
    spectral_slope_band,
    stft,
)

SR = 16000


def harmonic_stack(f0, dur_s=1.0, num_harmonics=5, amp=0.4, sr=SR):
    t = (np.arange(int(dur_s * sr)) + 0.5) / sr
    x = sum(np.sin(2 * np.pi * k * f0 * t) / k for k in range(1, num_harmonics + 1))
    return AudioClip(amp * x / np.max(np.abs(x)), sr)


def test_make_grid_frame_count():
    grid = make_grid(SR, SR, 0.025, 0.010)
    # (16000 - 400) // 160 + 1
    assert grid.num_frames == 98
    assert grid.window_samples == 400
    assert grid.hop_samples == 160
    # 4 s clip at the default 25 ms / 10 ms framing
    assert make_grid(4 * SR, SR).num_frames == 398


def test_grid_formula_random_triples():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        dur = rng.uniform(0.05, 6.0)
        win = rng.uniform(0.01, 0.04)
        hop = rng.uniform(0.005, win)
        n = int(dur * SR)
        w = int(round(win * SR))
        h = int(round(hop * SR))
        if n < w or h == 0:
            continue
        grid = make_grid(n, SR, win, hop)
        assert grid.num_frames == (n - w) // h + 1


def test_make_grid_too_short():
    with pytest.raises(ValueError, match="shorter than one"):
        make_grid(100, SR, 0.025, 0.010)


def test_frame_signal_shape():
    frames = frame_signal(np.arange(1000.0), 400, 160)
    assert frames.shape == (4, 400)
    assert frames[1, 0] == 160.0


def test_frame_slice_exact_boundaries():
    grid = FrameGrid(0.010, 0.025, 100, SR)
    assert grid.frame_slice(0.10, 0.20) == slice(10, 20)
    # float noise on an exact hop multiple must not shift the slice
    assert grid.frame_slice(0.1 + 1e-12, 0.2 - 1e-12) == slice(10, 20)
    assert grid.frame_slice(0.101, 0.199) == slice(11, 20)


def test_frame_slice_clamps():
    grid = FrameGrid(0.010, 0.025, 100, SR)
    assert grid.frame_slice(-5.0, 99.0) == slice(0, 100)
    reversed_interval = grid.frame_slice(2.0, 1.0)
    assert reversed_interval.stop <= reversed_interval.start


def test_stft_peak_bin():
    spec = stft(harmonic_stack(1000.0, num_harmonics=1))
    # 400-sample window pads to a 512-point FFT: 31.25 Hz bins
    assert spec.values.shape[1] == 257
    peak_hz = spec.freqs_hz[np.argmax(spec.power(), axis=1)]
    assert np.all(np.abs(peak_hz - 1000.0) <= 31.25)


def test_mel_filterbank_shape_and_coverage():
    freqs = np.fft.rfftfreq(512, 1.0 / SR)
    fb = mel_filterbank(freqs, 40, 0.0, 8000.0)
    assert fb.shape == (40, 257)
    assert np.all(fb >= 0.0)
    # every band responds somewhere, and interior frequencies are covered
    assert np.all(fb.sum(axis=1) > 0.0)
    coverage = fb.sum(axis=0)
    inside = (freqs > 300.0) & (freqs < 7500.0)
    assert np.all(coverage[inside] > 0.0)


def test_log_mel_floor_on_silence():
    clip = AudioClip(np.zeros(SR // 2), SR)
    lm = log_mel(stft(clip), num_bands=40)
    assert np.allclose(lm.values, np.log(1e-10))


def test_log_mel_rejects_excess_bands():
    clip = AudioClip(np.zeros(SR // 2), SR)
    with pytest.raises(ValueError, match="Mel bands"):
        log_mel(stft(clip), num_bands=400)


def test_f0_pure_sine_440():
    clip = harmonic_stack(440.0, num_harmonics=1)
    f0 = estimate_f0(clip, 250.0, 1600.0)
    inner = slice(3, f0.grid.num_frames - 3)
    assert np.all(f0.voiced[inner])
    assert np.all(np.abs(f0.f0_hz[inner] - 440.0) < 2.0)


def test_f0_flat_stack_accuracy():
    clip = harmonic_stack(450.0)
    f0 = estimate_f0(clip, 250.0, 1600.0)
    inner = slice(3, f0.grid.num_frames - 3)
    voiced = f0.voiced[inner]
    assert np.mean(voiced) >= 0.95
    err = np.abs(f0.f0_hz[inner][voiced] - 450.0)
    assert np.percentile(err, 95) < 2.0


def test_f0_stack_500_not_octave():
    clip = harmonic_stack(500.0, dur_s=0.5)
    f0 = estimate_f0(clip, 250.0, 1600.0)
    est = f0.f0_hz[f0.voiced]
    assert len(est) > 20
    assert np.all(np.abs(est - 500.0) < 3.0)


@pytest.mark.parametrize("true_f0", [250.0, 480.0, 990.0, 1400.0])
def test_f0_no_octave_errors(true_f0):
    clip = harmonic_stack(true_f0, dur_s=0.5)
    f0 = estimate_f0(clip, 250.0, 1600.0)
    est = f0.f0_hz[f0.voiced]
    assert len(est) > 20
    assert np.all(np.abs(est - true_f0) / true_f0 < 0.01)


def test_f0_noise_is_unvoiced():
    rng = np.random.default_rng(0)
    clip = AudioClip(0.3 * rng.standard_normal(SR // 2), SR)
    f0 = estimate_f0(clip, 250.0, 1600.0)
    assert np.mean(f0.voiced) < 0.2


def test_f0_range_validation():
    clip = harmonic_stack(450.0, dur_s=0.2)
    with pytest.raises(ValueError, match="below f0_max"):
        estimate_f0(clip, 500.0, 400.0)
    with pytest.raises(ValueError, match="too short"):
        estimate_f0(clip, 50.0, 1600.0)


def test_flatness_tone_vs_noise():
    tone = spectral_flatness(stft(harmonic_stack(450.0, dur_s=0.5)))
    assert np.median(tone.values) < 0.05
    rng = np.random.default_rng(1)
    noise = spectral_flatness(stft(AudioClip(0.3 * rng.standard_normal(SR // 2), SR)))
    assert np.median(noise.values) > 0.45
    assert np.all((tone.values >= 0.0) & (tone.values <= 1.0))


def test_mfcc_recovers_cosine_basis():
    # a log-Mel pattern equal to the j-th DCT basis vector must come back
    # as a single coefficient of size sqrt(B/2)
    B, j = 40, 3
    bands = np.arange(B)
    pattern = np.cos(np.pi * (bands + 0.5) * j / B)
    values = np.tile(pattern, (7, 1))
    from cryscreen.dsp import LogMelSpectrogram

    lm = LogMelSpectrogram(values, FrameGrid(0.010, 0.025, 7, SR))
    c = mfcc(lm, num_coeffs=13)
    assert c.shape == (7, 13)
    expect = np.zeros(13)
    expect[j - 1] = np.sqrt(B / 2.0)
    assert np.allclose(c, np.tile(expect, (7, 1)), atol=1e-12)


def test_mfcc_rejects_excess_coeffs():
    from cryscreen.dsp import LogMelSpectrogram

    lm = LogMelSpectrogram(np.zeros((3, 10)), FrameGrid(0.010, 0.025, 3, SR))
    with pytest.raises(ValueError, match="coefficients"):
        mfcc(lm, num_coeffs=10)


def test_loudness_follows_power():
    lo = loudness(log_mel(stft(harmonic_stack(450.0, amp=0.1)), 40))
    hi = loudness(log_mel(stft(harmonic_stack(450.0, amp=0.4)), 40))
    ratio = np.median(hi.values / lo.values)
    # energy scales by 16, loudness by 16**0.3
    assert abs(ratio - 16.0 ** 0.3) < 0.05


def test_lpc_formants_find_planted_resonances():
    planted = [1000.0, 2500.0, 4000.0]
    a = np.array([1.0])
    for f in planted:
        r = np.exp(-np.pi * 100.0 / SR)
        a = np.convolve(a, [1.0, -2.0 * r * np.cos(2 * np.pi * f / SR), r * r])
    rng = np.random.default_rng(0)
    x = sps.lfilter([1.0], a, rng.standard_normal(SR))
    x = 0.4 * x / np.max(np.abs(x))
    out = lpc_formants(AudioClip(x, SR))
    assert out.shape == (make_grid(SR, SR).num_frames, 3)
    found = np.median(out[np.all(out > 0, axis=1)], axis=0)
    assert abs(found[0] - 1000.0) < 150.0
    assert abs(found[1] - 2500.0) < 150.0
    assert abs(found[2] - 4000.0) < 200.0


def test_lpc_formants_silence_degenerate():
    out = lpc_formants(AudioClip(np.zeros(SR // 4), SR))
    assert np.all(out == 0.0)


def test_spectral_slope_exact():
    freqs = np.fft.rfftfreq(512, 1.0 / SR)
    slopes_db_per_hz = np.array([-0.012, 0.004])
    mags = 10.0 ** ((3.0 + slopes_db_per_hz[:, None] * freqs[None, :]) / 20.0)
    spec = Spectrogram(mags.astype(complex), freqs, FrameGrid(0.010, 0.025, 2, SR))
    got = spectral_slope_band(spec, 0.0, 500.0)
    assert np.allclose(got.values, slopes_db_per_hz, atol=1e-9)


def test_spectral_slope_needs_bins():
    freqs = np.fft.rfftfreq(512, 1.0 / SR)
    spec = Spectrogram(np.ones((2, len(freqs)), dtype=complex), freqs, FrameGrid(0.010, 0.025, 2, SR))
    with pytest.raises(ValueError, match="at least 3"):
        spectral_slope_band(spec, 100.0, 140.0)
