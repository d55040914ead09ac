"""Command line surface: segment, extract, select, train-eval, synth.

Every command writes deterministic output: rerunning with the same
inputs, config, and seed reproduces the files byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analytics import (
    cross_validate,
    roc_auc,
    select_consistent_features,
    sensitivity_at_specificity,
    train_logreg,
)
from .audio_io import load_wav
from .biomarkers import CRY_FEATURE_NAMES
from .config import PipelineConfig, load_config
from .pipeline import (
    FEATURE_COLUMNS,
    extract_manifest,
    load_split,
    read_features_csv,
    segment_clip,
    to_feature_matrix,
    write_features_csv,
    write_skipped_csv,
)
from .synthcry import ClassProfile, make_corpus
from .voicefeat import VOICE_FEATURE_NAMES

FEATURE_SETS = ("voice", "cry", "both", "selected-voice", "selected-cry", "selected-both")

_BASE_SETS = {
    "voice": VOICE_FEATURE_NAMES,
    "cry": CRY_FEATURE_NAMES,
    "both": FEATURE_COLUMNS,
}


def _load_cfg(path: str | None) -> PipelineConfig:
    return load_config(path) if path else PipelineConfig()


def _dump_json(obj, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def cmd_segment(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    seg, _ = segment_clip(load_wav(args.wav), cfg)
    doc = {
        "expirations": [[round(a, 3), round(b, 3)] for a, b in seg.expirations],
        "pauses": [[round(a, 3), round(b, 3)] for a, b in seg.pauses],
        "total_cry_seconds": round(seg.total_cry_seconds, 3),
    }
    json.dump(doc, sys.stdout, indent=1, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    result = extract_manifest(args.manifest, cfg, log=lambda msg: print(msg, file=sys.stderr))
    write_features_csv(result.rows, args.out)
    base, _ = os.path.splitext(args.out)
    write_skipped_csv(result.skipped, base + ".skipped.csv")
    print(f"extracted {len(result.rows)} recordings, skipped {len(result.skipped)}", file=sys.stderr)
    return 0


def _selection_json(report) -> dict:
    return {
        "sites": report.sites,
        "selected": report.selected,
        "directions": report.directions,
        "correlations": report.correlations,
    }


def cmd_select(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    sites = [s.strip() for s in args.sites.split(",") if s.strip()] if args.sites else list(cfg.selection_sites)
    matrix = to_feature_matrix(read_features_csv(args.features))
    report = select_consistent_features(matrix, sites)
    _dump_json(_selection_json(report), args.out)
    print(f"selected {len(report.selected)} of {len(matrix.feature_names)} features", file=sys.stderr)
    return 0


def _split_masks(matrix, assignment: dict[str, str]) -> tuple[np.ndarray, np.ndarray]:
    missing = [p for p in matrix.paths if p not in assignment]
    if missing:
        raise ValueError(f"split file does not assign {len(missing)} labeled rows (first: {missing[0]})")
    split = np.array([assignment[p] for p in matrix.paths])
    return np.isin(split, ("train", "val")), split == "test"


def cmd_train_eval(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args.config)
    matrix = to_feature_matrix(read_features_csv(args.features))
    trainval_mask, test_mask = _split_masks(matrix, load_split(args.split))
    if not test_mask.any():
        raise ValueError("split assigns no labeled rows to test")
    trainval = matrix.subset_rows(trainval_mask)

    base = _BASE_SETS[args.feature_set.removeprefix("selected-")]
    if args.feature_set.startswith("selected-"):
        report = select_consistent_features(trainval.subset_features(base), list(cfg.selection_sites))
        if not report.selected:
            raise ValueError(f"selection kept no features from set {args.feature_set!r}")
        names = report.selected
    else:
        names = base

    cv = cross_validate(trainval.subset_features(names), folds=cfg.cv_folds, reg_grid=cfg.reg_grid)
    model = train_logreg(trainval.subset_features(names), cv.best_reg_strength)

    test = matrix.subset_rows(test_mask).subset_features(names)
    curve = roc_auc(model.predict_proba(test.X), test.labels)
    per_site: dict[str, float | None] = {}
    for s in sorted(set(test.sites)):
        rows = test.subset_rows(np.array([site == s for site in test.sites]))
        if len(np.unique(rows.labels)) < 2:
            per_site[s] = None
            continue
        per_site[s] = roc_auc(model.predict_proba(rows.X), rows.labels).auc

    _dump_json(model.to_json_dict(), args.model_out)
    _dump_json(
        {
            "auc": curve.auc,
            "sens_at_spec80": sensitivity_at_specificity(curve, 0.80),
            "per_site_auc": per_site,
            "feature_set": args.feature_set,
            "num_features": len(names),
            "reg_strength": cv.best_reg_strength,
            "n_trainval": int(trainval_mask.sum()),
            "n_test": int(test_mask.sum()),
        },
        args.metrics_out,
    )
    print(f"test AUC {curve.auc:.3f} with {len(names)} {args.feature_set} features", file=sys.stderr)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    profile_doc = {}
    if args.profile:
        with open(args.profile) as fh:
            profile_doc = json.load(fh)
    n_per_class = args.n_per_class if args.n_per_class is not None else int(profile_doc.get("n_per_class", 100))
    sites = tuple(profile_doc.get("sites", ("ESUTH", "LASUTH", "SCDM")))
    positive = ClassProfile.from_json_dict(profile_doc["positive"]) if "positive" in profile_doc else None
    negative = ClassProfile.from_json_dict(profile_doc["negative"]) if "negative" in profile_doc else None
    records = make_corpus(args.out, n_per_class, positive, negative, seed=args.seed, sites=sites)
    print(f"wrote {len(records)} recordings to {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cry", description="Newborn cry biomarker screening pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one WAV into cry units, JSON to stdout")
    p.add_argument("wav")
    p.add_argument("--config")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("extract", help="extract per-recording feature rows from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("select", help="sign-consistent feature selection across sites")
    p.add_argument("--features", required=True)
    p.add_argument("--sites", help="comma-separated site list (default: config selection_sites)")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train-eval", help="cross-validate, fit, and evaluate a screening model")
    p.add_argument("--features", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--feature-set", choices=FEATURE_SETS, default="both")
    p.add_argument("--model-out", required=True)
    p.add_argument("--metrics-out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("synth", help="write a synthetic labeled corpus with ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--profile", help="JSON with n_per_class, sites, positive/negative class profiles")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-class", type=int)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"cry: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
