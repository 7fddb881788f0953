import csv
import json
import os
import subprocess
import sys

import pytest

from mcsga.cli import REPORT_HEADER, derive_seed, main

FAST = ["--grid-preset", "quick", "--n-trees", "20", "--population-size", "40", "--iterations", "8", "--n-boot", "200",
        "--folds", "5"]


def _files(root):
    return {
        os.path.relpath(os.path.join(d, f), root): open(os.path.join(d, f), "rb").read()
        for d, _, fs in os.walk(root)
        for f in fs
    }


@pytest.fixture(scope="module")
def run_a(tmp_path_factory):
    out = tmp_path_factory.mktemp("a")
    assert main(["pipeline", "--out", str(out), "--seed", "7", "--separation", "2", *FAST]) == 0
    return out


def test_report_shape(run_a):
    with open(run_a / "report.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == REPORT_HEADER
    assert [r[0] for r in rows[1:]] == [
        "RandomForest", "SvmRadial", "KNearest", "LogisticRegression", "NaiveBayes", "MultipleClassifierSystem",
    ]
    for r in rows[1:]:
        assert 0 <= float(r[5]) <= 1
    for name in ("ga_history.csv", "manifest.json", "comparison.json", "bundle/ensemble.json", "roc_SvmRadial.csv"):
        assert (run_a / name).exists()
    manifest = json.loads((run_a / "manifest.json").read_text())
    assert manifest["seeds"]["tune"] == derive_seed(7, "tune")
    assert manifest["ga"]["population_size"] == 40
    assert set(manifest["grids"]) == {"RandomForest", "SvmRadial", "KNearest", "LogisticRegression", "NaiveBayes"}
    assert manifest["versions"]["backend"] in ("compiled", "python")
    comp = json.loads((run_a / "comparison.json").read_text())
    assert 0 <= comp["p_value"] <= 1


def test_pipeline_deterministic(run_a, tmp_path):
    assert main(["pipeline", "--out", str(tmp_path), "--seed", "7", "--separation", "2", *FAST]) == 0
    assert _files(run_a) == _files(tmp_path)


def test_stages_match_pipeline(run_a, tmp_path):
    args = ["--out", str(tmp_path), "--seed", "7", "--separation", "2", *FAST]
    for stage in ("generate", "split", "train", "tune", "evaluate", "compare"):
        assert main([stage, *args]) == 0
    a = _files(run_a)
    b = _files(tmp_path)
    a.pop("manifest.json")
    assert a == b


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 3, "n_instances": 300, "window": [0.8, 1.0], "grid_preset": "quick",
                               "n_trees": 10, "population_size": 20, "iterations": 3, "n_boot": 100, "folds": 3}))
    out = tmp_path / "o"
    assert main(["pipeline", "--config", str(cfg), "--out", str(out), "--seed", "4"]) == 0
    m = json.loads((out / "manifest.json").read_text())
    assert m["config"]["seed"] == 4 and m["config"]["window"] == [0.8, 1.0]
    assert len((out / "data.csv").read_text().splitlines()) == 301
    assert len((out / "ga_history.csv").read_text().splitlines()) == 4


def test_user_data_and_threshold_criterion(run_a, tmp_path):
    out = tmp_path / "o"
    assert main(["pipeline", "--data", str(run_a / "data.csv"), "--out", str(out), "--threshold-criterion", "youden",
                 *FAST]) == 0
    assert (out / "data.csv").read_bytes() == (run_a / "data.csv").read_bytes()


def test_failure_names_stage(tmp_path, capsys):
    assert main(["pipeline", "--out", str(tmp_path), "--data", str(tmp_path / "missing.csv")]) != 0
    assert "stage 'generate'" in capsys.readouterr().err
    assert main(["tune", "--out", str(tmp_path / "empty")]) != 0
    assert "stage 'tune'" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": 1}')
    assert main(["generate", "--config", str(bad), "--out", str(tmp_path)]) != 0
    assert "unknown config fields" in capsys.readouterr().err


def test_bad_flags():
    with pytest.raises(SystemExit):
        main(["pipeline", "--window", "0.9"])
    with pytest.raises(SystemExit):
        main(["evaluate", "--threshold-criterion", "f1"])


def test_seed_derivation():
    assert derive_seed(0, "tune") == derive_seed(0, "tune")
    assert len({derive_seed(s, st) for s in range(5) for st in ("split", "tune", "train")}) == 15


@pytest.mark.slow
def test_python_backend_same_report(run_a, tmp_path):
    env = dict(os.environ, MCSGA_BACKEND="python")
    cmd = [sys.executable, "-m", "mcsga.cli", "pipeline", "--out", str(tmp_path), "--seed", "7", "--separation", "2", *FAST]
    subprocess.run(cmd, env=env, check=True)
    a, b = _files(run_a), _files(tmp_path)
    ma, mb = json.loads(a.pop("manifest.json")), json.loads(b.pop("manifest.json"))
    assert mb["versions"]["backend"] == "python"
    assert ma["seeds"] == mb["seeds"]
    assert a == b
