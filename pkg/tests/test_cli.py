import json

import numpy as np
import pytest

from otrelabel.cli import main
from otrelabel.pipeline import write_votes_csv
from helpers import make_biased_fixture
from test_pipeline import write_features_csv, write_fixture


def test_validate_ok(tmp_path, capsys):
    _, _, features, votes = write_fixture(tmp_path, 30, seed=0)
    assert main(["validate", "--features", features, "--votes", votes]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_reports_problems(tmp_path, capsys):
    ds, wl = make_biased_fixture(10, seed=1)
    features = str(tmp_path / "f.csv")
    bad = ds.__class__(ds.features, np.zeros(ds.n, int), ds.labels)
    write_features_csv(features, bad)
    votes = str(tmp_path / "v.csv")
    write_votes_csv(wl, votes)
    assert main(["validate", "--features", features, "--votes", votes]) == 1
    assert "empty group 1" in capsys.readouterr().out


def test_validate_missing_file_is_input_error(tmp_path):
    assert main(["validate", "--features", str(tmp_path / "nope.csv"),
                 "--votes", str(tmp_path / "nope2.csv")]) == 1


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as err:
        main(["run", "--features"])  # missing value and required flags
    assert err.value.code == 1


def test_run_writes_artifacts(tmp_path, capsys):
    _, _, features, votes = write_fixture(tmp_path, 60, seed=2)
    out = tmp_path / "out"
    code = main(["run", "--features", features, "--votes", votes,
                 "--out", str(out), "--ot-type", "linear",
                 "--end-model", "off"])
    assert code == 0
    for name in ("votes_repaired.csv", "pseudolabels.csv",
                 "fairness.json", "manifest.json"):
        assert (out / name).exists()
    fairness = json.loads((out / "fairness.json").read_text())
    assert fairness["end_model"] is None


def test_run_config_file_with_flag_override(tmp_path):
    _, _, features, votes = write_fixture(tmp_path, 60, seed=3)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("ot_type=linear\nknn_k=3\nend_model=off\n")
    out = tmp_path / "out"
    code = main(["run", "--features", features, "--votes", votes,
                 "--out", str(out), "--config", str(cfg),
                 "--knn-k", "1"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["ot_type"] == "linear"
    assert manifest["config"]["knn_k"] == 1  # flag beats file


def test_run_unknown_config_key_is_input_error(tmp_path):
    _, _, features, votes = write_fixture(tmp_path, 30, seed=4)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("otype=linear\n")
    assert main(["run", "--features", features, "--votes", votes,
                 "--out", str(tmp_path / "o"), "--config", str(cfg)]) == 1


def test_run_numerical_failure_exit_code(tmp_path):
    # lf_2's pairwise moments vanish inside each group, so every triplet
    # degenerates and accuracy estimation aborts numerically
    f = tmp_path / "f.csv"
    f.write_text("f1,group\n0.0,0\n0.1,0\n1.0,1\n1.1,1\n")
    v = tmp_path / "v.csv"
    v.write_text("lf_0,lf_1,lf_2\n1,1,1\n1,1,-1\n-1,-1,1\n-1,-1,-1\n")
    code = main(["run", "--features", str(f), "--votes", str(v),
                 "--out", str(tmp_path / "out")])
    assert code == 2


def test_lf_bank_materializes_votes(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text(
        "age,workclass,education,marital-status,occupation,relationship,"
        "race,capital-gain,native-country\n"
        "40,Private,Masters,Never-married,Sales,Wife,White,6000,Japan\n"
        "20,Private,HS-grad,Never-married,Adm-clerical,Not-in-family,"
        "White,0,United-States\n")
    out = tmp_path / "votes.csv"
    assert main(["lf-bank", "--bank", "adult-v1", "--raw", str(raw),
                 "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == ",".join(f"lf_{j}" for j in range(9))
    assert rows[1].split(",")[4] == "1"   # capital-gain 6000
    assert rows[2].split(",")[0] == "-1"  # age 20


def test_lf_bank_category_map(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text(
        "age,workclass,education,marital-status,occupation,relationship,"
        "race,capital-gain,native-country\n"
        "40,Private,HS-grad,Never-married,professional,Not-in-family,"
        "White,0,United-States\n")
    mapping = tmp_path / "map.json"
    mapping.write_text(json.dumps(
        {"occupation": {"professional": "Prof-specialty"}}))
    out = tmp_path / "votes.csv"
    assert main(["lf-bank", "--bank", "adult-v1", "--raw", str(raw),
                 "--out", str(out), "--category-map", str(mapping)]) == 0
    assert out.read_text().splitlines()[1].split(",")[8] == "1"


def test_theory_verb_writes_bundle(tmp_path, capsys):
    code = main(["theory", "--out", str(tmp_path),
                 "--shifts", "0,5,1000", "--shift-n", "3000",
                 "--lipschitz-trials", "3000",
                 "--map-sizes", "100,800", "--map-holdout", "2000"])
    assert code == 0
    bundle = json.loads((tmp_path / "theory_report.json").read_text())
    assert bundle["passed"] is True
    out = capsys.readouterr().out
    assert "shift_limit: ok" in out


def test_theory_verb_failure_exit_code(tmp_path):
    # a sweep stopping at a moderate shift cannot reach the 0.02 band
    code = main(["theory", "--out", str(tmp_path),
                 "--shifts", "0,5,20", "--shift-n", "2000",
                 "--lipschitz-trials", "1000",
                 "--map-sizes", "100,800", "--map-holdout", "1000"])
    assert code == 3
    bundle = json.loads((tmp_path / "theory_report.json").read_text())
    assert bundle["shift_limit"]["passed"] is False
