"""Pipeline configuration.

All tunables in one flat dataclass, loadable from a plain ``key=value``
text file. Unknown keys are rejected so a typo cannot silently fall back
to a default.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from . import analytics, biomarkers, segmenter
from .dsp import CANONICAL_SAMPLE_RATE, DEFAULT_HOP_S, DEFAULT_WINDOW_S


@dataclass(frozen=True)
class PipelineConfig:
    sample_rate: int = CANONICAL_SAMPLE_RATE
    window_s: float = DEFAULT_WINDOW_S
    hop_s: float = DEFAULT_HOP_S
    num_mel_bands: int = 80
    # newborn cry F0 stays in the hundreds of Hz; a floor of 250 keeps the
    # subharmonic lags that noise favors out of the search range entirely
    f0_min_hz: float = 250.0
    f0_max_hz: float = 1600.0
    voicing_threshold: float = 0.5
    active_fraction: float = segmenter.ACTIVE_FRACTION
    voicing_halfwidth_frames: int = segmenter.VOICING_HALFWIDTH_FRAMES
    min_unit_s: float = segmenter.MIN_UNIT_S
    min_pause_s: float = segmenter.MIN_PAUSE_S
    min_total_cry_s: float = segmenter.MIN_TOTAL_CRY_S
    hyperphonation_f0_hz: float = biomarkers.HYPERPHONATION_F0_HZ
    dysphonation_flatness: float = biomarkers.DYSPHONATION_FLATNESS
    glide_delta_hz: float = biomarkers.GLIDE_DELTA_HZ
    glide_max_span_s: float = biomarkers.GLIDE_MAX_SPAN_S
    vibrato_prominence_hz: float = biomarkers.VIBRATO_PROMINENCE_HZ
    vibrato_min_extrema: int = biomarkers.VIBRATO_MIN_EXTREMA
    vibrato_max_spacing_s: float = biomarkers.VIBRATO_MAX_SPACING_S
    hyperphonation_min_run_s: float = biomarkers.HYPERPHONATION_MIN_RUN_S
    dysphonation_min_run_s: float = biomarkers.DYSPHONATION_MIN_RUN_S
    melody_flat_ratio: float = biomarkers.MELODY_FLAT_RATIO
    cv_folds: int = analytics.DEFAULT_FOLDS
    reg_grid: tuple[float, ...] = analytics.DEFAULT_REG_GRID
    selection_sites: tuple[str, ...] = ("ESUTH", "LASUTH", "SCDM")

    def override(self, **kwargs) -> "PipelineConfig":
        return replace(self, **kwargs)


_PARSERS = {
    "int": int,
    "float": float,
    "tuple[float, ...]": lambda v: tuple(float(p.strip()) for p in v.split(",") if p.strip()),
    "tuple[str, ...]": lambda v: tuple(p.strip() for p in v.split(",") if p.strip()),
}
_FIELD_PARSER = {f.name: _PARSERS[f.type] for f in fields(PipelineConfig)}


def load_config(path: str) -> PipelineConfig:
    """Read a flat key=value file; blank lines and # comments allowed.

    Tuple-valued keys take comma-separated items.
    """
    overrides: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_PARSER:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                overrides[key] = _FIELD_PARSER[key](value)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from None
    return PipelineConfig(**overrides)


def save_config(config: PipelineConfig, path: str) -> None:
    with open(path, "w") as fh:
        for f in fields(PipelineConfig):
            value = getattr(config, f.name)
            if isinstance(value, tuple):
                fh.write(f"{f.name}={','.join(repr(v) if isinstance(v, float) else str(v) for v in value)}\n")
            else:
                fh.write(f"{f.name}={value!r}\n")
