"""The 12 generic voice features, computed over concatenated cry units."""

from cryscreen.pipeline import segment_clip
from cryscreen.synthcry import SynthSpec, UnitSpec, synth_cry
from cryscreen.voicefeat import compute_generic_features, concat_expirations

spec = SynthSpec(
    units=[
        UnitSpec(duration_s=0.9, pause_after_s=0.4, melody="falling", base_f0_hz=430.0),
        UnitSpec(duration_s=1.1, pause_after_s=0.4, melody="rising_falling", base_f0_hz=470.0),
        UnitSpec(duration_s=0.8, pause_after_s=0.0, melody="flat", base_f0_hz=400.0),
    ],
    seed=21,
)
clip, _ = synth_cry(spec)
seg, _ = segment_clip(clip)

# pauses are cut out first: functionals describe phonation, not silence
voiced_only = concat_expirations(clip, seg)
print(f"{clip.duration_seconds:.2f}s recording -> {voiced_only.duration_seconds:.2f}s of concatenated cry")

features = compute_generic_features(voiced_only)
print("\nname                            value")
for name, value in features.items():
    print(f"{name:30s} {value: .4f}")

print("\nslope* features carry the 0-500 Hz energy tilt, F2/F3 the formant")
print("positions, mfcc* the spectral shape, and loudness_stddevFallingSlope")
print("the variability of loudness decays; stddevNorm forms are unitless")
print("coefficients of variation. A fully voiced concatenation legitimately")
print("leaves the unvoiced-frame slope at 0.")
