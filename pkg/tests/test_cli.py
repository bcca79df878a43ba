import csv
import json
import shutil

import pytest

from citepurpose import __version__
from citepurpose.cli import main
from conftest import FIXTURES

FAST = {"max_epochs": 4, "patience": 4, "batch_size": 16, "h_lstm": 8, "hidden": 16, "d_trainable": 8}


@pytest.fixture
def config(tmp_path):
    """Fixture config copied next to the fixture data, with a small training budget."""
    raw = json.loads((FIXTURES / "config.json").read_text())
    raw["train"] = FAST
    for key in ("citations", "fulltext_dir", "worthiness", "sections", "word_vectors"):
        raw[key] = str(FIXTURES / raw[key])
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


def run(config, tmp_path, *args):
    return main([args[0], "--config", str(config), "--out", str(tmp_path / "out"), *args[1:]])


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith(f"# citepurpose {__version__} seed=")
    return list(csv.DictReader(lines[1:]))


def test_validate(config, tmp_path, capsys):
    assert run(config, tmp_path, "validate") == 0
    report = json.loads((tmp_path / "out" / "validate.json").read_text())
    assert report["records"] == 60 and report["fulltext_docs"] == 6 and report["citing_papers"] == 6
    assert set(report["label_counts"].values()) == {10}
    assert {"tool_version", "seed", "config_hash"} <= set(report)


def test_featurize(config, tmp_path):
    assert run(config, tmp_path, "featurize", "--export-vectors") == 0
    rows = read_csv(tmp_path / "out" / "features.csv")
    assert len(rows) == 60 and len(rows[0]) == 10
    tfidf = json.loads((tmp_path / "out" / "tfidf.json").read_text())
    assert tfidf["seed"] == 0
    assert len((tmp_path / "out" / "tfidf_vectors.jsonl").read_text().splitlines()) == 60


def test_train_predict_evaluate(config, tmp_path):
    assert run(config, tmp_path, "train") == 0
    out = tmp_path / "out"
    history = json.loads((out / "history.json").read_text())
    assert history["seed"] == 0 and len(history["history"]) >= 1
    assert run(config, tmp_path, "predict") == 0
    rows = read_csv(out / "predictions.csv")
    assert len(rows) == 60
    assert list(rows[0])[:2] == ["record_id", "predicted_label"] and list(rows[0])[2:] == [
        "p_BACKGROUND", "p_USES", "p_COMPARES_CONTRASTS", "p_MOTIVATION", "p_EXTENSION", "p_FUTURE"]
    for r in rows:
        probs = [float(v) for k, v in r.items() if k.startswith("p_")]
        assert abs(sum(probs) - 1) <= 1e-6
    assert run(config, tmp_path, "evaluate") == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert 0 <= metrics["macro_f1"] <= 1 and len(metrics["per_class"]) == 6


def test_train_twice_byte_identical(config, tmp_path):
    outputs = []
    for name in ("a", "b"):
        assert main(["train", "--config", str(config), "--out", str(tmp_path / name)]) == 0
        outputs.append(((tmp_path / name / "history.json").read_bytes(), (tmp_path / name / "model.ckpt.json").read_bytes()))
    assert outputs[0] == outputs[1]


def test_seed_override_changes_provenance(config, tmp_path):
    assert run(config, tmp_path, "validate", "--seed", "7") == 0
    assert json.loads((tmp_path / "out" / "validate.json").read_text())["seed"] == 7


def test_ablate(config, tmp_path):
    assert run(config, tmp_path, "ablate") == 0
    rows = read_csv(tmp_path / "out" / "ablation.csv")
    assert [r["variant"] for r in rows] == ["full", "no_hand", "no_lstm", "no_tfidf"]
    assert float(rows[0]["delta"]) == 0.0


def test_analyze_features(config, tmp_path):
    assert run(config, tmp_path, "analyze-features") == 0
    rows = read_csv(tmp_path / "out" / "feature_report.csv")
    assert [r["feature"] for r in rows][-1] == "tfidf_mlp" and len(rows) == 10
    for r in rows:
        for k, v in r.items():
            if k.startswith("auc_") and v:
                flag = r["flag_" + k[4:]]
                a = float(v)
                assert flag == ("strong_positive" if a > 0.57 else "strong_negative" if a < 0.43 else "neutral")


def test_predict_without_checkpoint(config, tmp_path, capsys):
    assert run(config, tmp_path, "predict", "--json-errors") == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and "checkpoint" in err["message"]


def test_missing_path_is_config_error(tmp_path, capsys):
    bad = tmp_path / "c.json"
    bad.write_text(json.dumps({"citations": "nope.jsonl"}))
    assert main(["validate", "--config", str(bad), "--json-errors"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "ConfigError"


def test_bad_records_are_data_error(tmp_path, capsys):
    shutil.copy(FIXTURES / "citations.jsonl", tmp_path / "c.jsonl")
    with open(tmp_path / "c.jsonl", "a") as fh:
        fh.write('{"record_id": "x"}\n')
    (tmp_path / "c.json").write_text(json.dumps({"citations": "c.jsonl"}))
    assert main(["validate", "--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o")]) == 2
    assert "line 61" in capsys.readouterr().err


def test_runtime_failure_exit_1(config, tmp_path, capsys):
    (tmp_path / "out").mkdir()
    (tmp_path / "out" / "model.ckpt.json").write_text("{not json")
    assert run(config, tmp_path, "predict") == 1


def test_config_hash_ignores_output_dir(config, tmp_path):
    from citepurpose.pipeline import RunConfig

    a = RunConfig.load(config, out=tmp_path / "x")
    b = RunConfig.load(config, out=tmp_path / "y")
    c = RunConfig.load(config, seed=5)
    assert a.config_hash == b.config_hash != c.config_hash
