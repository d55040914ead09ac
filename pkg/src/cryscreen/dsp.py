"""Frame-level signal analysis: STFT, log-Mel, F0, flatness, MFCC, formants.

Everything here runs on the canonical 16 kHz mono representation and a
shared 25 ms / 10 ms frame grid, so that any two per-frame series computed
from the same clip line up index for index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct

from .audio_io import AudioClip

CANONICAL_SAMPLE_RATE = 16000

DEFAULT_WINDOW_S = 0.025
DEFAULT_HOP_S = 0.010

MEL_FLOOR = 1e-10
POWER_FLOOR = 1e-12


@dataclass
class FrameGrid:
    """Mapping between frame indices and time for one analysis pass."""

    hop_seconds: float
    window_seconds: float
    num_frames: int
    sample_rate: int

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop_seconds * self.sample_rate))

    @property
    def window_samples(self) -> int:
        return int(round(self.window_seconds * self.sample_rate))

    def frame_times(self) -> np.ndarray:
        """Start time of every frame, in seconds."""
        return np.arange(self.num_frames) * self.hop_seconds

    def frame_slice(self, onset_s: float, offset_s: float) -> slice:
        """Frames whose start time falls in [onset_s, offset_s).

        A small tolerance absorbs float noise so that boundaries that are
        exact hop multiples do not gain or lose a frame.
        """
        t0 = int(np.ceil(onset_s / self.hop_seconds - 1e-9))
        t1 = int(np.ceil(offset_s / self.hop_seconds - 1e-9))
        t0 = max(t0, 0)
        t1 = min(max(t1, t0), self.num_frames)
        return slice(t0, t1)


@dataclass
class FrameSeries:
    """One scalar value per frame on a shared grid."""

    values: np.ndarray
    grid: FrameGrid


@dataclass
class Spectrogram:
    """Complex STFT, frames along axis 0 and frequency bins along axis 1."""

    values: np.ndarray
    freqs_hz: np.ndarray
    grid: FrameGrid

    def power(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass
class LogMelSpectrogram:
    values: np.ndarray
    grid: FrameGrid

    @property
    def num_bands(self) -> int:
        return self.values.shape[1]


@dataclass
class F0Contour:
    """Per-frame pitch track: f0_hz is 0 on unvoiced frames."""

    f0_hz: np.ndarray
    voiced: np.ndarray
    confidence: np.ndarray
    grid: FrameGrid


def frame_signal(x: np.ndarray, window_samples: int, hop_samples: int) -> np.ndarray:
    """Slice x into overlapping frames, one row per frame."""
    if len(x) < window_samples:
        raise ValueError(f"signal of {len(x)} samples is shorter than one {window_samples}-sample window")
    return sliding_window_view(x, window_samples)[::hop_samples]


def make_grid(n_samples: int, sample_rate: int, window_s: float = DEFAULT_WINDOW_S, hop_s: float = DEFAULT_HOP_S) -> FrameGrid:
    win = int(round(window_s * sample_rate))
    hop = int(round(hop_s * sample_rate))
    if n_samples < win:
        raise ValueError(f"signal of {n_samples} samples is shorter than one {win}-sample window")
    num = (n_samples - win) // hop + 1
    return FrameGrid(hop_s, window_s, num, sample_rate)


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def stft(clip: AudioClip, window_s: float = DEFAULT_WINDOW_S, hop_s: float = DEFAULT_HOP_S) -> Spectrogram:
    """Short-time Fourier transform with a Hann window.

    The FFT size is the next power of two at or above the window length,
    and only nonnegative frequencies are kept.
    """
    grid = make_grid(len(clip.samples), clip.sample_rate, window_s, hop_s)
    frames = frame_signal(np.asarray(clip.samples, dtype=np.float64), grid.window_samples, grid.hop_samples)
    window = np.hanning(grid.window_samples)
    nfft = _next_pow2(grid.window_samples)
    values = np.fft.rfft(frames * window, n=nfft, axis=1)
    freqs = np.fft.rfftfreq(nfft, 1.0 / clip.sample_rate)
    return Spectrogram(values, freqs, grid)


def mel_from_hz(f):
    """HTK Mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def hz_from_mel(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(freqs_hz: np.ndarray, num_bands: int, fmin: float, fmax: float) -> np.ndarray:
    """Triangular filters on the HTK Mel scale, one row per band."""
    edges = hz_from_mel(np.linspace(mel_from_hz(fmin), mel_from_hz(fmax), num_bands + 2))
    fb = np.zeros((num_bands, len(freqs_hz)))
    for b in range(num_bands):
        lo, ctr, hi = edges[b], edges[b + 1], edges[b + 2]
        up = (freqs_hz - lo) / max(ctr - lo, 1e-12)
        down = (hi - freqs_hz) / max(hi - ctr, 1e-12)
        fb[b] = np.clip(np.minimum(up, down), 0.0, None)
    return fb


def log_mel(spec: Spectrogram, num_bands: int = 80, fmin: float = 0.0, fmax: float | None = None) -> LogMelSpectrogram:
    """Log-energy Mel spectrogram (natural log, energies floored at 1e-10)."""
    if fmax is None:
        fmax = spec.grid.sample_rate / 2.0
    if num_bands > len(spec.freqs_hz):
        raise ValueError(f"{num_bands} Mel bands exceed the {len(spec.freqs_hz)} available FFT bins")
    fb = mel_filterbank(spec.freqs_hz, num_bands, fmin, fmax)
    energy = spec.power() @ fb.T
    return LogMelSpectrogram(np.log(np.maximum(energy, MEL_FLOOR)), spec.grid)


def estimate_f0(
    clip: AudioClip,
    f0_min: float = 200.0,
    f0_max: float = 2000.0,
    window_s: float = DEFAULT_WINDOW_S,
    hop_s: float = DEFAULT_HOP_S,
    voicing_threshold: float = 0.5,
) -> F0Contour:
    """Fundamental frequency tracking via the normalized difference function.

    Per frame, a cumulative-mean-normalized difference is computed over
    candidate lags; the first dip under an absolute threshold (walked down
    to its local minimum) wins, which is what keeps subharmonic minima from
    causing octave-down errors. The chosen lag is refined by parabolic
    interpolation. A frame counts as voiced when the periodicity
    confidence, 1 minus the normalized difference at the chosen lag,
    reaches voicing_threshold.
    """
    if f0_min >= f0_max:
        raise ValueError(f"f0_min {f0_min} must be below f0_max {f0_max}")
    sr = clip.sample_rate
    grid = make_grid(len(clip.samples), sr, window_s, hop_s)
    tau_min = max(int(np.floor(sr / f0_max)), 2)
    tau_max = int(np.ceil(sr / f0_min))
    win = grid.window_samples
    if tau_max > win // 2:
        raise ValueError(f"window of {win} samples is too short to resolve f0_min {f0_min} Hz")

    frames = frame_signal(np.asarray(clip.samples, dtype=np.float64), win, grid.hop_samples)
    span = win - tau_max  # integration window per lag
    base = frames[:, :span]
    num = frames.shape[0]
    d = np.empty((num, tau_max + 1))
    d[:, 0] = 0.0
    for tau in range(1, tau_max + 1):
        diff = base - frames[:, tau : tau + span]
        d[:, tau] = np.einsum("ij,ij->i", diff, diff)

    running = np.cumsum(d[:, 1:], axis=1)
    cmndf = np.ones_like(d)
    taus = np.arange(1, tau_max + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cmndf[:, 1:] = np.where(running > 0, d[:, 1:] * taus / running, 1.0)

    guarded = cmndf.copy()
    guarded[:, :tau_min] = np.inf
    # effective dip threshold per frame: the absolute 0.1 rule, relaxed to
    # just above the global minimum when nothing clears it. Taking the
    # FIRST qualifying dip (not the deepest) matters: for weak periodicity
    # the subharmonic dips at k times the true lag run slightly deeper
    # because the cumulative normalizer keeps growing, and the deepest-dip
    # choice would land an octave or two low.
    floor_val = np.min(guarded, axis=1)
    eff_thr = np.maximum(0.1, floor_val * 1.2 + 1e-12)
    below = guarded <= eff_thr[:, None]
    first = np.argmax(below, axis=1)
    # walk each dip down to its local minimum
    not_falling = np.empty_like(below)
    not_falling[:, :-1] = cmndf[:, :-1] <= cmndf[:, 1:]
    not_falling[:, -1] = True
    cols = np.arange(tau_max + 1)
    tau_star = np.argmax(not_falling & (cols[None, :] >= first[:, None]), axis=1)

    rows = np.arange(num)
    # octave-down correction: with weak periodicity the dip at twice the
    # true lag runs systematically deeper (the cumulative normalizer keeps
    # growing), so when the half-lag dip is nearly as deep, prefer it
    offs = np.arange(-2, 3)
    for _ in range(2):
        half = tau_star // 2
        idx = np.clip(half[:, None] + offs[None, :], tau_min, tau_max)
        vals = guarded[rows[:, None], idx]
        k = np.argmin(vals, axis=1)
        take = (half >= tau_min) & (vals[rows, k] <= cmndf[rows, tau_star] * 1.4 + 0.02)
        tau_star = np.where(take, idx[rows, k], tau_star)

    mid = cmndf[rows, tau_star]
    left = cmndf[rows, np.maximum(tau_star - 1, 0)]
    right = cmndf[rows, np.minimum(tau_star + 1, tau_max)]
    denom = left - 2.0 * mid + right
    shift = np.where(np.abs(denom) > 1e-12, 0.5 * (left - right) / np.where(denom == 0, 1, denom), 0.0)
    shift = np.clip(shift, -1.0, 1.0)
    tau_refined = np.clip(tau_star + shift, tau_min, tau_max)

    # periodicity evidence is the deepest dip, not the (possibly
    # octave-corrected) chosen one
    confidence = np.clip(1.0 - np.minimum(mid, floor_val), 0.0, 1.0)
    voiced = confidence >= voicing_threshold
    f0 = np.where(voiced, sr / tau_refined, 0.0)
    return F0Contour(f0, voiced, confidence, grid)


def spectral_flatness(spec: Spectrogram) -> FrameSeries:
    """Per-frame Wiener entropy: geometric over arithmetic mean of power.

    Values live in [0, 1]; near 0 for line spectra, toward 1 for noise.
    """
    p = np.maximum(spec.power(), POWER_FLOOR)
    geo = np.exp(np.mean(np.log(p), axis=1))
    arith = np.mean(p, axis=1)
    return FrameSeries(geo / arith, spec.grid)


def mfcc(logmel: LogMelSpectrogram, num_coeffs: int = 13) -> np.ndarray:
    """Mel-frequency cepstral coefficients via an orthonormal DCT-II.

    Returns an array of shape (num_frames, num_coeffs) where column j holds
    coefficient j+1; the DC term is dropped, so column 0 is mfcc1.
    """
    if num_coeffs >= logmel.num_bands:
        raise ValueError(f"{num_coeffs} coefficients need more than {logmel.num_bands} Mel bands")
    coef = dct(logmel.values, type=2, norm="ortho", axis=1)
    return coef[:, 1 : num_coeffs + 1]


def loudness(logmel: LogMelSpectrogram) -> FrameSeries:
    """Perceptual-leaning energy proxy: summed Mel energies to the 0.3 power."""
    total = np.sum(np.exp(logmel.values), axis=1)
    return FrameSeries(total ** 0.3, logmel.grid)


def lpc_formants(
    clip: AudioClip,
    order: int = 12,
    num_formants: int = 3,
    max_bandwidth_hz: float = 400.0,
    window_s: float = DEFAULT_WINDOW_S,
    hop_s: float = DEFAULT_HOP_S,
) -> np.ndarray:
    """Per-frame formant estimates from linear prediction.

    Fits an all-pole model by the autocorrelation method (Levinson
    recursion), takes the complex roots in the upper half plane with
    bandwidth under max_bandwidth_hz, and reports their frequencies sorted
    ascending. Output is (num_frames, num_formants) with zeros standing in
    where a frame is degenerate or yields too few narrow resonances.
    """
    grid = make_grid(len(clip.samples), clip.sample_rate, window_s, hop_s)
    win = grid.window_samples
    if order >= win:
        raise ValueError(f"LPC order {order} must be below the window length {win}")
    sr = clip.sample_rate
    frames = frame_signal(np.asarray(clip.samples, dtype=np.float64), win, grid.hop_samples) * np.hanning(win)

    nfft = _next_pow2(2 * win)
    spectrum = np.abs(np.fft.rfft(frames, n=nfft, axis=1)) ** 2
    autocorr = np.fft.irfft(spectrum, axis=1)[:, : order + 1]

    num = frames.shape[0]
    a = np.zeros((num, order + 1))
    a[:, 0] = 1.0
    err = autocorr[:, 0].copy()
    degenerate = err < 1e-10
    err[degenerate] = 1.0
    for i in range(1, order + 1):
        acc = np.einsum("ij,ij->i", a[:, 1:i], autocorr[:, i - 1 : 0 : -1]) if i > 1 else 0.0
        k = -(autocorr[:, i] + acc) / err
        a_prev = a[:, 1:i].copy()
        a[:, 1:i] = a_prev + k[:, None] * a_prev[:, ::-1]
        a[:, i] = k
        err = err * (1.0 - k * k)
        bad = err <= 1e-12
        degenerate |= bad
        err[bad] = 1.0

    # batched companion-matrix eigenvalues for all frames at once
    comp = np.zeros((num, order, order))
    comp[:, 0, :] = -a[:, 1:]
    idx = np.arange(order - 1)
    comp[:, idx + 1, idx] = 1.0
    roots = np.linalg.eigvals(comp)

    angles = np.angle(roots)
    freqs = angles * sr / (2.0 * np.pi)
    with np.errstate(divide="ignore"):
        bandwidths = -(sr / np.pi) * np.log(np.maximum(np.abs(roots), 1e-12))
    keep = (roots.imag > 0) & (bandwidths < max_bandwidth_hz)

    out = np.zeros((num, num_formants))
    for t in range(num):
        if degenerate[t]:
            continue
        cand = np.sort(freqs[t][keep[t]])
        n = min(len(cand), num_formants)
        out[t, :n] = cand[:n]
    return out


def spectral_slope_band(spec: Spectrogram, fmin_hz: float = 0.0, fmax_hz: float = 500.0) -> FrameSeries:
    """Per-frame OLS slope of log power (dB) against frequency over a band."""
    sel = (spec.freqs_hz >= fmin_hz) & (spec.freqs_hz <= fmax_hz)
    n_bins = int(np.count_nonzero(sel))
    if n_bins < 3:
        raise ValueError(f"band [{fmin_hz}, {fmax_hz}] Hz covers {n_bins} bins; need at least 3")
    x = spec.freqs_hz[sel]
    y = 10.0 * np.log10(np.maximum(spec.power()[:, sel], POWER_FLOOR))
    xc = x - x.mean()
    slope = (y - y.mean(axis=1, keepdims=True)) @ xc / np.dot(xc, xc)
    return FrameSeries(slope, spec.grid)
