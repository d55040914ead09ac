"""Expiratory cry-unit segmentation from loudness and voicing.

A cry recording alternates between expiratory phonation (the cry units)
and pauses. Units are found where the frame loudness clears an adaptive
threshold and voicing is present; brief voicing dropouts inside a unit are
bridged, sub-perceptual gaps are merged away and too-short fragments are
dropped. All thresholds adapt to the clip so recording gain does not need
per-file calibration.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import F0Contour, FrameSeries

MIN_UNIT_S = 0.2
MIN_PAUSE_S = 0.05
VOICING_HALFWIDTH_FRAMES = 3
ACTIVE_FRACTION = 0.5
MIN_TOTAL_CRY_S = 3.0

_EPS = 1e-9


@dataclass
class CrySegmentation:
    """Expiration intervals in seconds, with the gaps between them."""

    expirations: list[tuple[float, float]]
    pauses: list[tuple[float, float]] = field(default_factory=list)

    @property
    def total_cry_seconds(self) -> float:
        return float(sum(b - a for a, b in self.expirations))

    @staticmethod
    def from_expirations(expirations: list[tuple[float, float]]) -> "CrySegmentation":
        pauses = [(expirations[i][1], expirations[i + 1][0]) for i in range(len(expirations) - 1)]
        return CrySegmentation(list(expirations), pauses)


def bridge_voicing_gaps(voiced: np.ndarray, halfwidth: int) -> np.ndarray:
    """Fill unvoiced gaps of up to 2*halfwidth frames between voiced frames.

    Gaps at the clip edges are left alone, so the result never extends
    beyond the first or last voiced frame.
    """
    out = voiced.copy()
    idx = np.flatnonzero(voiced)
    if len(idx) < 2:
        return out
    gaps = np.diff(idx) - 1
    for pos, gap in zip(idx[:-1], gaps):
        if 0 < gap <= 2 * halfwidth:
            out[pos + 1 : pos + 1 + gap] = True
    return out


def detect_cry_units(
    f0: F0Contour,
    loud: FrameSeries,
    min_unit_s: float = MIN_UNIT_S,
    min_pause_s: float = MIN_PAUSE_S,
    voicing_halfwidth: int = VOICING_HALFWIDTH_FRAMES,
    active_fraction: float = ACTIVE_FRACTION,
) -> CrySegmentation:
    """Segment a clip into expiratory cry units.

    Frames are candidates when loudness clears an adaptive level set a
    fixed fraction of the way up the clip's own loudness span (10th to
    90th percentile) and voicing is present nearby. Anchoring the level to
    the span rather than to a percentile keeps it valid whatever share of
    the clip is phonation. Activation needs the full level, while a unit
    stays open down to half that fraction (hysteresis). Gaps shorter than
    min_pause_s merge, fragments shorter than min_unit_s drop.
    """
    if f0.grid.num_frames != loud.grid.num_frames:
        raise ValueError("f0 and loudness were computed on different frame grids")
    L = np.asarray(loud.values, dtype=np.float64)
    hop = loud.grid.hop_seconds

    lo = np.percentile(L, 10)
    hi = np.percentile(L, 90)
    active_high = lo + active_fraction * (hi - lo)
    release_low = lo + 0.5 * active_fraction * (hi - lo)

    near_voiced = bridge_voicing_gaps(f0.voiced.astype(bool), voicing_halfwidth)
    core = (L >= active_high) & near_voiced
    sustain = (L >= release_low) & near_voiced

    regions = []
    for start, end in runs_of(sustain):
        if core[start : end + 1].any():
            regions.append([start, end])

    # merge gaps shorter than the minimum audible pause
    merged: list[list[int]] = []
    for seg in regions:
        if merged and (seg[0] - merged[-1][1] - 1) * hop < min_pause_s - _EPS:
            merged[-1][1] = seg[1]
        else:
            merged.append(seg)

    kept = [(s, e) for s, e in merged if (e - s + 1) * hop >= min_unit_s - _EPS]
    expirations = [(float(s * hop), float((e + 1) * hop)) for s, e in kept]
    return CrySegmentation.from_expirations(expirations)


def meets_curation_rule(seg: CrySegmentation, min_total_cry_s: float = MIN_TOTAL_CRY_S) -> bool:
    """Recordings need at least min_total_cry_s of summed cry to be usable."""
    return seg.total_cry_seconds >= min_total_cry_s - _EPS


def runs_of(mask: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of True, as inclusive (start, end) index pairs."""
    padded = np.concatenate(([False], mask.astype(bool), [False]))
    edges = np.diff(padded.astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return list(zip(starts, ends))
