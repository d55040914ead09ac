"""Recording-level feature extraction and tabular feature I/O.

One recording goes in as audio and comes out as a fixed 38-value row:
26 cry biomarker summaries plus 12 generic voice functionals. Recordings
whose detected cry mass is too small for stable summaries are not
extracted; manifest-level extraction collects them separately with a
reason instead of failing the whole run.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import dsp
from .analytics import FeatureMatrix
from .audio_io import AudioClip, ManifestEntry, load_manifest, load_wav, relative_to_manifest, resample
from .biomarkers import CRY_FEATURE_NAMES, UnitFlags, aggregate_biomarkers, unit_biomarker_flags
from .config import PipelineConfig
from .segmenter import CrySegmentation, detect_cry_units, meets_curation_rule
from .voicefeat import VOICE_FEATURE_NAMES, compute_generic_features, concat_expirations

FEATURE_COLUMNS = CRY_FEATURE_NAMES + VOICE_FEATURE_NAMES
ID_COLUMNS = ["path", "patient_id", "site", "period", "label"]

SKIP_REASON_SHORT_CRY = "below 3s cry"


class CurationError(ValueError):
    """Total detected cry in the recording is under the usable minimum."""

    def __init__(self, total_cry_seconds: float, minimum_s: float):
        super().__init__(
            f"recording holds {total_cry_seconds:.2f}s of cry, under the {minimum_s:.1f}s minimum"
        )
        self.total_cry_seconds = total_cry_seconds


@dataclass
class FrontEnd:
    """Per-frame descriptors shared by segmentation and the biomarker pass."""

    f0: dsp.F0Contour
    loudness: dsp.FrameSeries
    flatness: dsp.FrameSeries


def analyze_frames(clip: AudioClip, config: PipelineConfig) -> FrontEnd:
    spec = dsp.stft(clip, config.window_s, config.hop_s)
    logmel = dsp.log_mel(spec, config.num_mel_bands)
    f0 = dsp.estimate_f0(
        clip,
        f0_min=config.f0_min_hz,
        f0_max=config.f0_max_hz,
        window_s=config.window_s,
        hop_s=config.hop_s,
        voicing_threshold=config.voicing_threshold,
    )
    return FrontEnd(f0=f0, loudness=dsp.loudness(logmel), flatness=dsp.spectral_flatness(spec))


def segment_clip(clip: AudioClip, config: PipelineConfig | None = None) -> tuple[CrySegmentation, FrontEnd]:
    config = config if config is not None else PipelineConfig()
    if clip.sample_rate != config.sample_rate:
        clip = resample(clip, config.sample_rate)
    front = analyze_frames(clip, config)
    seg = detect_cry_units(
        front.f0,
        front.loudness,
        min_unit_s=config.min_unit_s,
        min_pause_s=config.min_pause_s,
        voicing_halfwidth=config.voicing_halfwidth_frames,
        active_fraction=config.active_fraction,
    )
    return seg, front


def unit_flags_for(front: FrontEnd, seg: CrySegmentation, config: PipelineConfig) -> list[UnitFlags]:
    return [
        unit_biomarker_flags(
            front.f0,
            front.flatness,
            unit,
            hyperphonation_f0_hz=config.hyperphonation_f0_hz,
            hyperphonation_min_run_s=config.hyperphonation_min_run_s,
            dysphonation_flatness=config.dysphonation_flatness,
            dysphonation_min_run_s=config.dysphonation_min_run_s,
            glide_delta_hz=config.glide_delta_hz,
            glide_max_span_s=config.glide_max_span_s,
            vibrato_min_extrema=config.vibrato_min_extrema,
            vibrato_prominence_hz=config.vibrato_prominence_hz,
            vibrato_max_spacing_s=config.vibrato_max_spacing_s,
            melody_flat_ratio=config.melody_flat_ratio,
        )
        for unit in seg.expirations
    ]


def extract_clip(clip: AudioClip, config: PipelineConfig | None = None) -> tuple[dict[str, float], CrySegmentation]:
    """Full per-recording feature vector, or CurationError when unusable."""
    config = config if config is not None else PipelineConfig()
    if clip.sample_rate != config.sample_rate:
        clip = resample(clip, config.sample_rate)
    seg, front = segment_clip(clip, config)
    if not meets_curation_rule(seg, config.min_total_cry_s):
        raise CurationError(seg.total_cry_seconds, config.min_total_cry_s)

    flags = unit_flags_for(front, seg, config)
    features = aggregate_biomarkers(seg, flags)
    features.update(compute_generic_features(concat_expirations(clip, seg)))
    return {name: features[name] for name in FEATURE_COLUMNS}, seg


@dataclass
class FeatureRow:
    entry: ManifestEntry
    features: dict[str, float]


@dataclass
class SkippedRecording:
    entry: ManifestEntry
    reason: str


@dataclass
class ExtractionResult:
    rows: list[FeatureRow]
    skipped: list[SkippedRecording]


def extract_manifest(manifest_path: str, config: PipelineConfig | None = None, log=None) -> ExtractionResult:
    """Extract every recording in a manifest.

    Curation failures and per-file read errors are collected with a
    reason rather than aborting the run; a bad file must not cost the
    features of the good ones.
    """
    config = config if config is not None else PipelineConfig()
    rows: list[FeatureRow] = []
    skipped: list[SkippedRecording] = []
    for entry in load_manifest(manifest_path):
        try:
            clip = load_wav(relative_to_manifest(manifest_path, entry.path))
            features, _ = extract_clip(clip, config)
        except CurationError:
            skipped.append(SkippedRecording(entry, SKIP_REASON_SHORT_CRY))
            if log is not None:
                log(f"skip {entry.path}: {SKIP_REASON_SHORT_CRY}")
            continue
        except (OSError, ValueError) as exc:
            skipped.append(SkippedRecording(entry, str(exc)))
            if log is not None:
                log(f"skip {entry.path}: {exc}")
            continue
        rows.append(FeatureRow(entry, features))
        if log is not None:
            log(f"ok   {entry.path}")
    return ExtractionResult(rows, skipped)


def write_features_csv(rows: list[FeatureRow], path: str) -> None:
    # repr keeps the shortest round-trippable decimal form, so rewriting
    # the same rows yields byte-identical files
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ID_COLUMNS + FEATURE_COLUMNS)
        for row in rows:
            e = row.entry
            writer.writerow(
                [e.path, e.patient_id, e.site, e.period, e.label]
                + [repr(float(row.features[name])) for name in FEATURE_COLUMNS]
            )


def read_features_csv(path: str) -> list[FeatureRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ID_COLUMNS + FEATURE_COLUMNS:
            raise ValueError(f"{path}: unexpected feature CSV header")
        rows = []
        for rec in reader:
            entry = ManifestEntry(*rec[:5])
            values = {name: float(v) for name, v in zip(FEATURE_COLUMNS, rec[5:])}
            rows.append(FeatureRow(entry, values))
    return rows


def write_skipped_csv(skipped: list[SkippedRecording], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "reason"])
        for s in skipped:
            writer.writerow([s.entry.path, s.reason])


def to_feature_matrix(rows: list[FeatureRow], feature_names: list[str] | None = None) -> FeatureMatrix:
    """Labeled rows as a matrix; unlabeled rows are left out."""
    names = feature_names if feature_names is not None else FEATURE_COLUMNS
    labeled = [r for r in rows if r.entry.binary_label is not None]
    if not labeled:
        raise ValueError("no labeled rows to build a feature matrix from")
    X = np.array([[r.features[n] for n in names] for r in labeled], dtype=np.float64)
    return FeatureMatrix(
        feature_names=list(names),
        X=X,
        labels=np.array([r.entry.binary_label for r in labeled], dtype=np.int64),
        sites=[r.entry.site for r in labeled],
        patient_ids=[r.entry.patient_id for r in labeled],
        paths=[r.entry.path for r in labeled],
    )


def load_split(path: str) -> dict[str, str]:
    """path -> train|val|test assignments from a two-column CSV."""
    out: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["path", "split"]:
            raise ValueError(f"{path}: expected header path,split")
        for i, rec in enumerate(reader, start=2):
            if len(rec) != 2 or rec[1] not in ("train", "val", "test"):
                raise ValueError(f"{path}:{i}: bad split row {rec!r}")
            out[rec[0]] = rec[1]
    return out
