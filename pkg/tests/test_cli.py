import json

import numpy as np
import pytest
import yaml

from kvnlab.cli import config as cfgmod
from kvnlab.cli import scenarios
from kvnlab.cli.__main__ import main
from kvnlab.cli.output import read_csv


def write_config(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def run(tmp_path, data, name="cfg.yaml"):
    data = dict(data)
    data.setdefault("output", {"dir": str(tmp_path / "out")})
    return main(["run", write_config(tmp_path / name, data), "-q"]), tmp_path / "out"


SMALL_HO = {
    "scenario": "classical-ho",
    "grid": {"x": {"n": 64, "lo": -8.0, "hi": 8.0}, "k": {"n": 64, "lo": -8.0, "hi": 8.0}},
    "time": {"dt": 1e-2, "T": 1.0, "save_every": 5},
}


def test_classical_run_writes_artifacts(tmp_path):
    code, out = run(tmp_path, SMALL_HO)
    assert code == 0
    header = (out / "timeseries.csv").read_text().splitlines()[0]
    assert header == "t,mean_x,mean_k,var_x,var_k,norm,energy_c"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["scenario"] == "classical-ho"
    assert manifest["csv_columns"] == header.split(",")
    assert manifest["config"]["time"]["dt"] == 1e-2
    assert manifest["ordering"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["verdicts"]["norm_conserved"]


def test_rerun_is_bit_identical_and_summary_recomputes(tmp_path):
    code, out = run(tmp_path, SMALL_HO)
    first = (out / "timeseries.csv").read_bytes()
    summary = json.loads((out / "summary.json").read_text())
    assert code == 0 and run(tmp_path, SMALL_HO)[0] == 0
    assert (out / "timeseries.csv").read_bytes() == first
    cfg = cfgmod.load(tmp_path / "cfg.yaml")
    table = read_csv(out / "timeseries.csv")
    again = json.loads(json.dumps(scenarios.summarize(cfg, table)))
    assert again == summary


def test_unknown_scenario_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, {"scenario": "warp-drive"})
    assert code == 4
    err = capsys.readouterr().err
    for name in cfgmod.SCENARIOS:
        assert name in err


@pytest.mark.parametrize("bad", [
    {"scenario": "classical-ho", "colour": "red"},
    {"scenario": "classical-ho", "grid": {"x": {"n": 100, "lo": -8.0, "hi": 8.0}}},
    {"scenario": "classical-ho", "time": {"dt": -1.0}},
    {"scenario": "classical-ho", "time": {"dt": 0.03, "T": 1.0}},
    {"scenario": "hybrid-obs", "coupling": {"kind": "sideways"}},
])
def test_invalid_config_exit_code(tmp_path, bad):
    assert run(tmp_path, bad)[0] == 3


def test_boundary_guard_exit_code(tmp_path):
    data = {"scenario": "classical-free",
            "grid": {"x": {"n": 64, "lo": -4.0, "hi": 4.0}, "k": {"n": 64, "lo": -8.0, "hi": 8.0}},
            "time": {"dt": 1e-2, "T": 5.0, "save_every": 10}}
    code, out = run(tmp_path, data)
    assert code == 2
    assert not (out / "timeseries.csv").exists()


def test_uncoupled_hybrid_conserves_energy(tmp_path):
    axis = {"n": 64, "lo": -10.0, "hi": 10.0}
    data = {"scenario": "hybrid-boost",
            "grid": {"q": axis, "x": {"n": 32, "lo": -8.0, "hi": 8.0}, "k": {"n": 32, "lo": -8.0, "hi": 8.0}},
            "time": {"dt": 2.5e-4, "T": 1.0, "save_every": 40},
            "coupling": {"c": 0.0, "kind": "boost"},
            "initial": {"var_x": 0.5, "var_k": 0.5}}
    code, out = run(tmp_path, data)
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["total_energy_drift"] < 1e-7
    assert summary["verdicts"]["energy_conserved"]
    assert summary["verdicts"]["correspondence_holds"]
    assert summary["verdicts"]["energy_rates_consistent"]
    assert summary["heisenberg_rhs"]["p"] == "-q"


def test_algebra_scenario(tmp_path):
    code, out = run(tmp_path, {"scenario": "algebra-check"})
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert all(summary["verdicts"].values())
    assert (out / "timeseries.csv").read_text().startswith("check,subject,result\n")


def test_premeasure_scenario(tmp_path):
    code, out = run(tmp_path, {"scenario": "premeasure"})
    assert code == 0
    table = read_csv(out / "timeseries.csv")
    assert list(table["outcome"]) == ["L", "R"]
    np.testing.assert_allclose(table["probability"], table["projector_probability"], atol=1e-7)


def test_output_root_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("KVNLAB_OUTPUT_ROOT", str(tmp_path / "root"))
    cfg = write_config(tmp_path / "a.yaml", {"scenario": "algebra-check"})
    assert main(["run", cfg, "-q"]) == 0
    assert (tmp_path / "root" / "algebra-check" / "summary.json").exists()


def test_explain(capsys):
    assert main(["explain", "hybrid-boost"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("hybrid-boost:")
    assert "boost" in out
    assert main(["explain", "nope"]) == 4


def test_verify_algebra(capsys):
    assert main(["verify", "algebra"]) == 0
    out = capsys.readouterr().out
    assert "[PASS] 4." in out
    assert "1/1 criteria passed" in out


def test_verify_coarse_step_fails(capsys):
    assert main(["verify", "classical", "--dt", "0.1"]) == 1
    assert "[FAIL] 1." in capsys.readouterr().out


def test_verify_unknown_suite():
    assert main(["verify", "everything"]) == 3
