"""End-to-end checks for the cry command line: synth, extract, select,
train-eval, segment, plus argument plumbing and the error exit path."""

import json

import pytest

from cryscreen.cli import FEATURE_SETS, build_parser, main
from cryscreen.pipeline import read_features_csv


@pytest.fixture(scope="module")
def chain(tmp_path_factory):
    """Tiny corpus pushed through synth and extract once for the module."""
    root = tmp_path_factory.mktemp("chain")
    corpus = root / "corpus"
    assert main(["synth", "--out", str(corpus), "--n-per-class", "8", "--seed", "11"]) == 0
    features = root / "features.csv"
    assert main(["extract", "--manifest", str(corpus / "manifest.csv"), "--out", str(features)]) == 0
    rows = read_features_csv(str(features))
    split = root / "split.csv"
    kinds = {3: "test", 2: "val"}
    split.write_text(
        "path,split\n" + "".join(f"{r.entry.path},{kinds.get(i % 4, 'train')}\n" for i, r in enumerate(rows))
    )
    cfg = root / "cry.cfg"
    cfg.write_text("cv_folds=3\n")
    return {"root": root, "corpus": corpus, "features": features, "split": split, "cfg": cfg, "rows": rows}


def test_parser_surface():
    parser = build_parser()
    assert parser.prog == "cry"
    assert FEATURE_SETS == ("voice", "cry", "both", "selected-voice", "selected-cry", "selected-both")
    args = parser.parse_args(["segment", "baby.wav"])
    assert args.command == "segment" and args.wav == "baby.wav"
    args = parser.parse_args(["train-eval", "--features", "f", "--split", "s", "--model-out", "m", "--metrics-out", "x"])
    assert args.feature_set == "both"
    with pytest.raises(SystemExit):
        parser.parse_args(["train-eval", "--features", "f", "--split", "s", "--model-out", "m",
                           "--metrics-out", "x", "--feature-set", "all"])
    with pytest.raises(SystemExit):
        parser.parse_args([])


def test_synth_and_extract_outputs(chain):
    wavs = sorted(p.name for p in chain["corpus"].glob("*.wav"))
    assert len(wavs) == 16 and wavs[0] == "rec0000.wav"
    assert (chain["corpus"] / "ground_truth.json").exists()
    assert len(chain["rows"]) == 16
    skipped = (chain["root"] / "features.skipped.csv").read_text()
    assert skipped.splitlines()[0] == "path,reason"


def test_extract_is_reproducible(chain):
    again = chain["root"] / "features2.csv"
    assert main(["extract", "--manifest", str(chain["corpus"] / "manifest.csv"), "--out", str(again)]) == 0
    assert again.read_bytes() == chain["features"].read_bytes()


def test_select_command(chain):
    out = chain["root"] / "selection.json"
    assert main(["select", "--features", str(chain["features"]), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"sites", "selected", "directions", "correlations"}
    assert doc["sites"] == ["ESUTH", "LASUTH", "SCDM"]
    for name in doc["selected"]:
        assert doc["directions"][name] in ("positive", "negative")


def test_train_eval_command(chain):
    model_out = chain["root"] / "model.json"
    metrics_out = chain["root"] / "metrics.json"
    code = main([
        "train-eval", "--features", str(chain["features"]), "--split", str(chain["split"]),
        "--model-out", str(model_out), "--metrics-out", str(metrics_out), "--config", str(chain["cfg"]),
    ])
    assert code == 0
    metrics = json.loads(metrics_out.read_text())
    assert set(metrics) == {
        "auc", "sens_at_spec80", "per_site_auc", "feature_set",
        "num_features", "reg_strength", "n_trainval", "n_test",
    }
    assert metrics["feature_set"] == "both"
    assert metrics["num_features"] == 38
    assert metrics["n_trainval"] == 12 and metrics["n_test"] == 4
    assert 0.0 <= metrics["auc"] <= 1.0
    assert metrics["reg_strength"] in (0.1, 1.0, 10.0, 100.0)
    # one test row per site and class except ESUTH, which holds one of each
    assert metrics["per_site_auc"]["LASUTH"] is None
    model = json.loads(model_out.read_text())
    assert set(model) == {"features", "weights", "bias", "standardize", "reg_strength"}
    assert len(model["weights"]) == len(model["features"]) == 38


def test_segment_command_stdout(chain, capsys):
    wav = str(chain["corpus"] / "rec0000.wav")
    assert main(["segment", wav]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"expirations", "pauses", "total_cry_seconds"}
    assert doc["total_cry_seconds"] >= 3.0
    for a, b in doc["expirations"]:
        assert 0.0 <= a < b
        assert round(a, 3) == a and round(b, 3) == b


def test_error_exit_path(tmp_path, capsys):
    assert main(["segment", str(tmp_path / "nothing.wav")]) == 1
    assert "cry: error:" in capsys.readouterr().err
    assert main(["extract", "--manifest", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o.csv")]) == 1
    assert "cry: error:" in capsys.readouterr().err
