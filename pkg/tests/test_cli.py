import json

import pytest

from lorenzcert.cli import main


def run(tmp_path, *args):
    code = main([*args, "--out", str(tmp_path)])
    return code


def test_validate_ok(tmp_path):
    assert run(tmp_path, "validate", "--depth", "6") == 0
    rep = json.loads((tmp_path / "validation.json").read_text())
    assert rep["passed"]


def test_validate_mutated_model_exit5(tmp_path):
    model = tmp_path / "m.json"
    model.write_text(json.dumps({"c": "0.8"}))
    assert run(tmp_path, "validate", "--depth", "6", "--model", str(model)) == 5
    assert json.loads((tmp_path / "error.json").read_text())["exit_code"] == 5


def test_config_errors(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k": 2, "colour": "red"}))
    assert run(tmp_path, "attractor", "--config", str(cfg)) == 2
    assert json.loads((tmp_path / "error.json").read_text())["error"] == "ConfigError"
    assert run(tmp_path, "attractor", "--k", "0") == 2
    assert run(tmp_path, "nonsense") == 2


def test_precondition_exit3(tmp_path):
    assert run(tmp_path, "birkhoff", "--start", "0,1,0", "--T", "10") == 3


def test_attractor_outputs(tmp_path):
    assert run(tmp_path, "attractor", "--k", "2") == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["symmetric"]
    pgm = (tmp_path / "attractor.pgm").read_bytes()
    assert pgm.startswith(b"P5")


def test_return_time_and_integrate(tmp_path):
    assert run(tmp_path, "return-time", "--point", "0.5,20,27", "--eps", "2^-8") == 0
    assert abs(float(json.loads((tmp_path / "return_time.json").read_text())["return_time_decimal"]) - 6.2832) < 0.01
    assert run(tmp_path, "integrate", "--k", "1", "--phi", "one") == 0
    out = json.loads((tmp_path / "integral.json").read_text())
    assert out["lo"] <= 1 <= out["hi"]


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("LORENZCERT_OUT", str(tmp_path / "envout"))
    assert main(["acim", "--q", "6"]) == 0
    assert (tmp_path / "envout" / "acim.csv").exists()
