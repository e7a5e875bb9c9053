import csv
import json

import numpy as np
import pytest

from featattn import cli
from featattn import model as nn
from featattn.artifact import FORMAT_VERSION, load_artifact


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run("gen-data", "--n", 296, "--out", root / "data", "--seed", 1) == 0
    assert run("train", "--data", root / "data" / "cohort.csv", "--out", root / "model", "--epochs", 4, "--seed", 2) == 0
    return root


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestGenData:
    def test_rows_and_columns(self, trained):
        rows = read_rows(trained / "data" / "cohort.csv")
        assert len(rows) == 297
        assert all(len(r) == 24 for r in rows)
        truth = json.loads((trained / "data" / "ground_truth.json").read_text())
        assert truth["planted_features"] == ["SurgicalTime", "PTA", "ReResection"]

    def test_same_seed_same_bytes(self, tmp_path):
        run("gen-data", "--n", 80, "--out", tmp_path / "a", "--seed", 5)
        run("gen-data", "--n", 80, "--out", tmp_path / "b", "--seed", 5)
        assert (tmp_path / "a" / "cohort.csv").read_bytes() == (tmp_path / "b" / "cohort.csv").read_bytes()

    def test_below_minimum(self, tmp_path):
        assert run("gen-data", "--n", 10, "--out", tmp_path) == 5

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert run("gen-data", "--out", blocker / "sub") == 6

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["train"])
        assert info.value.code == 2


class TestTrainEval:
    def test_outputs(self, trained):
        m = trained / "model"
        for name in ("model.json", "curves.csv", "val.csv", "report.json"):
            assert (m / name).exists()
        assert len(read_rows(m / "curves.csv")) == 5
        assert load_artifact(m / "model.json").version == FORMAT_VERSION

    def test_eval_reproduces_final_validation_row(self, trained):
        m = trained / "model"
        assert run("eval", "--model", m / "model.json", "--data", m / "val.csv", "--out", trained / "ev") == 0
        metrics = json.loads((trained / "ev" / "metrics.json").read_text())
        report = json.loads((m / "report.json").read_text())
        assert metrics == report["final_val"]
        last = read_rows(m / "curves.csv")[-1]
        assert float(last[3]) == metrics["loss"] and float(last[4]) == metrics["accuracy"]

    def test_logistic_ablation(self, trained, tmp_path):
        data = trained / "data" / "cohort.csv"
        assert run("train", "--data", data, "--out", tmp_path, "--epochs", 2, "--ablation", "logistic") == 0
        assert json.loads((tmp_path / "report.json").read_text())["model_kind"] == "logistic"
        assert load_artifact(tmp_path / "model.json").kind == "logistic"
        assert run("eval", "--model", tmp_path / "model.json", "--data", data, "--out", tmp_path) == 0
        assert run("explain", "--model", tmp_path / "model.json", "--data", data, "--out", tmp_path) == 5

    def test_corrupt_csv(self, trained, tmp_path, capsys):
        rows = read_rows(trained / "data" / "cohort.csv")
        rows[3][1] = "Sometimes"
        bad = tmp_path / "bad.csv"
        with open(bad, "w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        assert run("train", "--data", bad, "--out", tmp_path / "o", "--epochs", 1) == 3
        err = capsys.readouterr().err
        assert "row 3" in err and "SmokingStatus" in err and "[load]" in err

    def test_empty_data(self, trained, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text(",".join(read_rows(trained / "data" / "cohort.csv")[0]) + "\n")
        assert run("eval", "--model", trained / "model" / "model.json", "--data", empty) == 5

    def test_unknown_version(self, trained, tmp_path):
        doc = json.loads((trained / "model" / "model.json").read_text())
        doc["format_version"] = "featattn-model/99"
        p = tmp_path / "m.json"
        p.write_text(json.dumps(doc))
        assert run("eval", "--model", p, "--data", trained / "model" / "val.csv", "--out", tmp_path) == 7

    def test_truncated_artifact(self, trained, tmp_path):
        text = (trained / "model" / "model.json").read_text()
        p = tmp_path / "m.json"
        p.write_text(text[: len(text) // 2])
        assert run("eval", "--model", p, "--data", trained / "model" / "val.csv", "--out", tmp_path) == 7

    def test_shape_inconsistent_artifact(self, trained, tmp_path):
        doc = json.loads((trained / "model" / "model.json").read_text())
        doc["model"]["weights"]["attn.b"] = [0.0]
        p = tmp_path / "m.json"
        p.write_text(json.dumps(doc))
        assert run("eval", "--model", p, "--data", trained / "model" / "val.csv", "--out", tmp_path) == 7

    def test_schema_mismatch(self, trained, tmp_path):
        schema = json.loads(json.dumps(load_artifact(trained / "model" / "model.json").schema.to_dict()))
        schema["features"][0]["name"] = "AgeYears"
        p = tmp_path / "schema.json"
        p.write_text(json.dumps(schema))
        code = run("eval", "--model", trained / "model" / "model.json", "--data", trained / "model" / "val.csv",
                   "--schema", p, "--out", tmp_path)
        assert code == 4


class TestExplain:
    def test_outputs_and_determinism(self, trained, tmp_path):
        args = ["explain", "--model", trained / "model" / "model.json", "--data", trained / "model" / "val.csv"]
        assert run(*args, "--out", tmp_path / "a") == 0
        assert run(*args, "--out", tmp_path / "b") == 0
        for name in ("attention_report.csv", "importance.csv", "embeddings.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        rows = read_rows(tmp_path / "a" / "attention_report.csv")
        alpha = np.array([[float(x) for x in r[1:24]] for r in rows[1:]])
        assert np.abs(alpha.sum(axis=1) - 1).max() <= 1e-9 and alpha.min() >= 0
        imp = read_rows(tmp_path / "a" / "importance.csv")
        assert abs(sum(float(r[2]) for r in imp[1:]) - 1) <= 1e-9

    def test_single_patient(self, trained, tmp_path):
        rows = read_rows(trained / "model" / "val.csv")
        one = tmp_path / "one.csv"
        with open(one, "w", newline="") as fh:
            csv.writer(fh).writerows(rows[:2])
        assert run("explain", "--model", trained / "model" / "model.json", "--data", one, "--out", tmp_path) == 0
        assert len(read_rows(tmp_path / "attention_report.csv")) == 2


class TestGradcheck:
    def test_passes_and_is_repeatable(self, capsys):
        assert run("gradcheck", "--configs", 4) == 0
        first = capsys.readouterr().out
        assert run("gradcheck", "--configs", 4) == 0
        assert capsys.readouterr().out == first

    def test_corrupted_gradient_fails(self, monkeypatch, capsys):
        real = nn.backward

        def corrupted(cache, labels, params):
            g = real(cache, labels, params)
            g["attn.W"] = g["attn.W"] * 1.5
            return g

        monkeypatch.setattr(nn, "backward", corrupted)
        assert run("gradcheck", "--configs", 3) == 1
        assert "attn.W" in capsys.readouterr().err
