import json
import subprocess
import sys

import pytest

from opcast import IoHmmModel, parse_dataset
from opcast.cli import main

SIM_SPEC = {
    "states": 2,
    "transition": [[0.85, 0.15], [0.25, 0.75]],
    "state_means": [[3.0, 2.8], [2.2, 2.0]],
    "noise_cov": [[0.01, 0.0], [0.0, 0.01]],
    "days": 14,
    "periods_per_shift": 5,
    "dt_max": 0.4,
    "qu_frac_max": 0.05,
    "seed": 7,
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = root / "spec.json"
    spec.write_text(json.dumps(SIM_SPEC))
    data = root / "data.csv"
    assert main(["simulate", "--spec", str(spec), "--out", str(data)]) == 0
    snapshot = root / "model.json"
    assert main(["fit", "--data", str(data), "--out", str(snapshot),
                 "--kmax", "4"]) == 0
    return root


class TestSimulate:
    def test_writes_parseable_records(self, workdir):
        result = parse_dataset(workdir / "data.csv")
        assert result.errors == []
        assert len(result.records) == 14 * 3 * 5

    def test_seed_override_changes_the_draw(self, workdir, tmp_path):
        other = tmp_path / "other.csv"
        assert main(["simulate", "--spec", str(workdir / "spec.json"),
                     "--out", str(other), "--seed", "99"]) == 0
        assert other.read_text() != (workdir / "data.csv").read_text()

    def test_same_spec_is_deterministic(self, workdir, tmp_path):
        again = tmp_path / "again.csv"
        assert main(["simulate", "--spec", str(workdir / "spec.json"),
                     "--out", str(again)]) == 0
        assert again.read_text() == (workdir / "data.csv").read_text()

    def test_bad_spec_file(self, tmp_path):
        missing = tmp_path / "none.json"
        assert main(["simulate", "--spec", str(missing),
                     "--out", str(tmp_path / "x.csv")]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        assert main(["simulate", "--spec", str(bad),
                     "--out", str(tmp_path / "x.csv")]) == 1


class TestFit:
    def test_snapshot_is_a_restorable_model(self, workdir):
        model = IoHmmModel.load(workdir / "model.json")
        assert model.clusters is not None
        assert model.params

    def test_progress_output(self, workdir, tmp_path, capsys):
        assert main(["fit", "--data", str(workdir / "data.csv"),
                     "--out", str(tmp_path / "m.json"), "--kmax", "4"]) == 0
        out = capsys.readouterr().out
        assert "states: K=" in out
        assert "patterns:" in out

    def test_missing_data_file(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "none.csv"),
                     "--out", str(tmp_path / "m.json")]) == 2

    def test_empty_dataset(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("n,date,start,shift,pr.ord,ics,rcs,TU,DU,TgU,"
                         "nstops,OT,SBT,DT,PLT,QLT\n")
        assert main(["fit", "--data", str(empty),
                     "--out", str(tmp_path / "m.json")]) == 2

    def test_config_file_and_flag_precedence(self, workdir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"lags": 2, "kmax": 4}))
        out = tmp_path / "m2.json"
        assert main(["fit", "--data", str(workdir / "data.csv"),
                     "--config", str(cfg), "--out", str(out)]) == 0
        assert IoHmmModel.load(out).config.features.q == 2
        assert main(["fit", "--data", str(workdir / "data.csv"),
                     "--config", str(cfg), "--lags", "3",
                     "--out", str(out)]) == 0
        assert IoHmmModel.load(out).config.features.q == 3

    def test_unknown_config_key(self, workdir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"lols": 2}))
        assert main(["fit", "--data", str(workdir / "data.csv"),
                     "--config", str(cfg),
                     "--out", str(tmp_path / "m.json")]) == 1

    def test_bad_flag_value(self, workdir, tmp_path):
        assert main(["fit", "--data", str(workdir / "data.csv"),
                     "--out", str(tmp_path / "m.json"),
                     "--lambda-u", "1.2"]) == 1


class TestForecast:
    def test_document_on_stdout(self, workdir, capsys):
        assert main(["forecast", "--snapshot", str(workdir / "model.json"),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu M"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert set(doc["y_hat"]) == {"OpT", "NOpT"}
        lo, hi = doc["intervals"]["OpT"]
        assert lo <= doc["y_hat"]["OpT"] <= hi
        assert doc["state"] >= 1

    def test_document_to_file(self, workdir, tmp_path):
        out = tmp_path / "fc.json"
        assert main(["forecast", "--snapshot", str(workdir / "model.json"),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu M", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert "y_hat" in doc

    def test_update_snapshot_persists_the_centroid_move(self, workdir,
                                                        tmp_path):
        snap = tmp_path / "m.json"
        snap.write_text((workdir / "model.json").read_text())
        before = snap.read_text()
        assert main(["forecast", "--snapshot", str(snap),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu M"]) == 0
        assert snap.read_text() == before
        assert main(["forecast", "--snapshot", str(snap),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu M", "--update-snapshot"]) == 0
        assert snap.read_text() != before

    def test_unseen_pattern_is_a_numeric_failure(self, workdir):
        # an announced label outside the learned shift codes maps to the
        # all-zeros pattern, which has no observations
        assert main(["forecast", "--snapshot", str(workdir / "model.json"),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu X"]) == 3

    def test_bad_next_values(self, workdir):
        assert main(["forecast", "--snapshot", str(workdir / "model.json"),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu M", "--next-values", "{oops"]) == 1

    def test_missing_snapshot(self, workdir, tmp_path):
        assert main(["forecast", "--snapshot", str(tmp_path / "none.json"),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu M"]) == 2

    def test_corrupt_snapshot(self, workdir, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert main(["forecast", "--snapshot", str(bad),
                     "--data", str(workdir / "data.csv"),
                     "--shift", "Tu M"]) == 2


class TestEvaluate:
    def test_report_files_and_table(self, workdir, tmp_path, capsys):
        out = tmp_path / "report.csv"
        summary = tmp_path / "report.json"
        assert main(["evaluate", "--data", str(workdir / "data.csv"),
                     "--out", str(out), "--summary-out", str(summary),
                     "--models", "persistence,varx-q1,no-lags",
                     "--kmax", "4"]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "model,fold,shift_type,response,metric,value,count"
        assert any(line.startswith("persistence,") for line in lines)
        assert any(line.startswith("_summary,") for line in lines)
        doc = json.loads(summary.read_text())
        assert doc["models"] == ["persistence", "varx-q1", "no-lags"]
        table = capsys.readouterr().out
        assert "persistence" in table and "varx-q1" in table

    def test_unknown_model_name(self, workdir, tmp_path):
        assert main(["evaluate", "--data", str(workdir / "data.csv"),
                     "--out", str(tmp_path / "r.csv"),
                     "--models", "sarimax"]) == 1


class TestInspect:
    def test_describes_the_snapshot(self, workdir, capsys):
        assert main(["inspect", "--snapshot",
                     str(workdir / "model.json")]) == 0
        out = capsys.readouterr().out
        assert "states: K=" in out
        assert "state 1:" in out
        assert "band=" in out
        assert "patterns:" in out


class TestParsing:
    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag(self):
        assert main(["fit", "--out", "x.json"]) == 1

    def test_module_entry_point(self, workdir, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "opcast.cli", "simulate",
             "--spec", str(workdir / "spec.json"),
             "--out", str(tmp_path / "sub.csv")],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "wrote" in proc.stdout
