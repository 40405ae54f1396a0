import json

import pytest

from rare_rules.classifier import Classifier
from rare_rules.cli import run
from rare_rules.dataset import AttributeSchema

from conftest import DATA


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run(["synth", "--spec", str(DATA / "planted_spec.json"), "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def trained(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    rc = run(["train", "--data", str(synth_dir / "data.csv"), "--schema", str(synth_dir / "schema.json"),
              "--seed", "0", "--out", str(out)])
    assert rc == 0
    return out


def test_synth_train_evaluate_recovers_planted(synth_dir, trained, capsys):
    clf = Classifier.load(trained / "classifier.json")
    truth = json.loads((synth_dir / "ground_truth.json").read_text())
    got = {frozenset(map(tuple, pat)) for pat in
           (json.loads((trained / "classifier.json").read_text())["patterns"][i]["items"]
            for i in range(len(clf)))}
    for p in truth["planted"]:
        assert frozenset(map(tuple, p["items"])) in got
    for name in ("family.jsonl", "audit.jsonl", "test.csv"):
        assert (trained / name).exists()
    out = trained / "eval"
    assert run(["evaluate", "--classifier", str(trained / "classifier.json"),
                "--data", str(trained / "test.csv"), "--out", str(out)]) == 0
    conf = json.loads((out / "confusion.json").read_text())
    assert conf["sensitivity"] > 0.4 and conf["specificity"] > 0.8
    assert (out / "evaluation.csv").read_text().startswith("label,loc_supp")
    assert "tp=" in capsys.readouterr().out


def test_train_is_byte_reproducible(synth_dir, trained, tmp_path):
    rc = run(["train", "--data", str(synth_dir / "data.csv"), "--schema", str(synth_dir / "schema.json"),
              "--seed", "0", "--out", str(tmp_path)])
    assert rc == 0
    for name in ("classifier.json", "family.jsonl", "audit.jsonl", "test.csv"):
        assert (tmp_path / name).read_bytes() == (trained / name).read_bytes()
    prov = json.loads((tmp_path / "classifier.json").read_text())["provenance"]
    assert prov["seed"] == 0 and prov["params"]["max_length"] == 3
    assert set(prov["fingerprints"]) == {"train", "validation"}


def test_export_tree(trained, capsys):
    assert run(["export-tree", "--classifier", str(trained / "classifier.json")]) == 0
    assert capsys.readouterr().out.startswith("digraph")
    assert run(["export-tree", "--classifier", str(trained / "classifier.json"),
                "--out", str(trained / "tree")]) == 0
    assert (trained / "tree" / "tree.dot").exists()


def test_grid_select_only_prints_nine(capsys):
    assert run(["grid", "--points", str(DATA / "reference_points.csv"), "--select-only"]) == 0
    assert capsys.readouterr().out.strip() == "9"


def test_empty_training_file_is_a_data_error(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    rc = run(["train", "--data", str(empty), "--class-column", "y", "--positive-label", "1",
              "--out", str(tmp_path)])
    assert rc == 2
    assert "empty dataset" in capsys.readouterr().err
    header_only = tmp_path / "h.csv"
    header_only.write_text("a,y\n")
    assert run(["train", "--data", str(header_only), "--class-column", "y",
                "--positive-label", "1", "--out", str(tmp_path)]) == 2


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["mine", "--bogus"], ["mine", "--min-local-support", "2", "--data", "x.csv"],
    ["train", "--out", "."], ["grid", "--select-only"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert run(argv) == 1
    assert "usage error" in capsys.readouterr().err


def test_missing_file_exit_2(tmp_path, capsys):
    rc = run(["mine", "--data", str(tmp_path / "nope.csv"), "--class-column", "y",
              "--positive-label", "1", "--out", str(tmp_path)])
    assert rc == 2
    assert "nope.csv" in capsys.readouterr().err


def test_schema_split_mine_with_config(synth_dir, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"min_local_support": 0.2, "max-length": 2, "seed": 4,
                               "class_column": "y", "positive_label": "1"}))
    data = str(synth_dir / "data.csv")
    assert run(["schema", "--config", str(cfg), "--data", data, "--out", str(tmp_path)]) == 0
    schema = AttributeSchema.load(tmp_path / "schema.json")
    ref = AttributeSchema.load(synth_dir / "schema.json")
    assert [(a.name, set(a.levels)) for a in schema.attributes] == \
        [(a.name, set(a.levels)) for a in ref.attributes]
    assert run(["split", "--config", str(cfg), "--data", data, "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "split.json").read_text())
    assert meta["provenance"]["seed"] == 4
    assert run(["mine", "--config", str(cfg), "--data", str(tmp_path / "train.csv"),
                "--schema", str(tmp_path / "schema.json"), "--with-metrics", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "rules.jsonl").read_text().splitlines()
    head = json.loads(lines[0])
    assert head["params"]["min_local_support"] == 0.2 and head["params"]["max_length"] == 2
    assert all(len(json.loads(x)["items"]) <= 2 and "metrics" in json.loads(x) for x in lines[1:])


def test_grid_full_sweep(synth_dir, tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("RARE_RULES_THREADS", "2")
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"grid": [{"min_local_support": 0.1, "min_conf_ratio": 4, "max_length": 3},
                                        {"min_local_support": 0.15, "min_conf_ratio": 5, "max_length": 2}]}))
    rc = run(["grid", "--config", str(cfg), "--data", str(synth_dir / "data.csv"),
              "--schema", str(synth_dir / "schema.json"), "--out", str(tmp_path)])
    assert rc == 0
    assert capsys.readouterr().out.strip() in ("1", "2")
    assert len((tmp_path / "grid.csv").read_text().splitlines()) == 3
