"""Generic voice functionals over the concatenated cry.

Expiration segments are spliced into one waveform and summarized by a
small set of spectral/cepstral functionals. Names follow the usual
low-level-descriptor conventions: a V suffix marks voiced-frames-only
statistics, UV unvoiced-only, amean an arithmetic mean, and stddevNorm a
coefficient of variation (population std over |mean|).
"""

from __future__ import annotations

import numpy as np

from .audio_io import AudioClip
from . import dsp
from .segmenter import CrySegmentation, runs_of

VOICE_FEATURE_NAMES = [
    "slopeUV0_500_amean",
    "slopeV0_500_stddevNorm",
    "slopeV0_500_amean",
    "F2_amean",
    "F3_amean",
    "F3_stddevNorm",
    "mfcc3_amean",
    "mfcc3V_amean",
    "mfcc3V_stddevNorm",
    "loudness_stddevFallingSlope",
    "mfcc2_stddevNorm",
    "mfcc4V_stddevNorm",
]

MIN_CONCAT_S = 0.5
_NORM_GUARD = 1e-8


def concat_expirations(clip: AudioClip, seg: CrySegmentation) -> AudioClip:
    """Splice the expiration intervals into one contiguous waveform."""
    if not seg.expirations:
        raise ValueError("cannot concatenate a segmentation with zero cry units")
    sr = clip.sample_rate
    parts = [clip.samples[int(round(a * sr)) : int(round(b * sr))] for a, b in seg.expirations]
    return AudioClip(np.concatenate(parts), sr)


def moving_average3(x: np.ndarray) -> np.ndarray:
    """3-frame moving average; edges average over the frames that exist."""
    kernel = np.ones(3)
    total = np.convolve(x, kernel, mode="same")
    count = np.convolve(np.ones(len(x)), kernel, mode="same")
    return total / count


def masked_moving_average3(x: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """3-frame moving average over valid frames only; invalid frames stay 0."""
    total = np.convolve(np.where(valid, x, 0.0), np.ones(3), mode="same")
    count = np.convolve(valid.astype(float), np.ones(3), mode="same")
    out = np.divide(total, count, out=np.zeros(len(x)), where=count > 0)
    return np.where(valid, out, 0.0)


def _amean(x: np.ndarray, mask: np.ndarray) -> float:
    return float(np.mean(x[mask])) if mask.any() else 0.0


def _stddev_norm(x: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        return 0.0
    sel = x[mask]
    return float(np.std(sel) / max(abs(np.mean(sel)), _NORM_GUARD))


def stddev_falling_slope(x: np.ndarray, hop_s: float) -> float:
    """Population std of per-run slopes over strictly falling runs of 3+ frames."""
    slopes = []
    drops = np.diff(x) < 0
    for s, e in runs_of(drops):
        if e - s + 1 >= 2:  # two consecutive drops = three frames
            slopes.append((x[e + 1] - x[s]) / ((e + 1 - s) * hop_s))
    return float(np.std(slopes)) if slopes else 0.0


def compute_generic_features(concat: AudioClip, min_duration_s: float = MIN_CONCAT_S) -> dict[str, float]:
    """The 12 generic functionals of a concatenated cry.

    Every low-level descriptor is smoothed with a 3-frame moving average
    before the functionals. Formant statistics skip frames where no
    narrow-bandwidth resonance was found. Raises when the input is
    shorter than min_duration_s or contains no voiced frames at all
    (every V feature would be undefined).
    """
    if concat.duration_seconds < min_duration_s:
        raise ValueError(
            f"concatenated cry of {concat.duration_seconds:.3f}s is shorter than {min_duration_s}s"
        )
    spec = dsp.stft(concat)
    logmel = dsp.log_mel(spec)
    f0 = dsp.estimate_f0(concat)
    voiced = np.asarray(f0.voiced, dtype=bool)
    unvoiced = ~voiced
    if not voiced.any():
        raise ValueError(
            "no voiced frames: slopeV0_500, F2, F3, mfcc3V, mfcc4V features are undefined"
        )

    slope = moving_average3(dsp.spectral_slope_band(spec, 0.0, 500.0).values)
    loud = moving_average3(dsp.loudness(logmel).values)
    ceps = dsp.mfcc(logmel)
    mfcc2 = moving_average3(ceps[:, 1])
    mfcc3 = moving_average3(ceps[:, 2])
    mfcc4 = moving_average3(ceps[:, 3])

    formants = dsp.lpc_formants(concat)
    f2_valid = voiced & (formants[:, 1] > 0)
    f3_valid = voiced & (formants[:, 2] > 0)
    f2 = masked_moving_average3(formants[:, 1], f2_valid)
    f3 = masked_moving_average3(formants[:, 2], f3_valid)

    allf = np.ones(len(slope), dtype=bool)
    return {
        "slopeUV0_500_amean": _amean(slope, unvoiced),
        "slopeV0_500_stddevNorm": _stddev_norm(slope, voiced),
        "slopeV0_500_amean": _amean(slope, voiced),
        "F2_amean": _amean(f2, f2_valid),
        "F3_amean": _amean(f3, f3_valid),
        "F3_stddevNorm": _stddev_norm(f3, f3_valid),
        "mfcc3_amean": _amean(mfcc3, allf),
        "mfcc3V_amean": _amean(mfcc3, voiced),
        "mfcc3V_stddevNorm": _stddev_norm(mfcc3, voiced),
        "loudness_stddevFallingSlope": stddev_falling_slope(loud, spec.grid.hop_seconds),
        "mfcc2_stddevNorm": _stddev_norm(mfcc2, allf),
        "mfcc4V_stddevNorm": _stddev_norm(mfcc4, voiced),
    }
