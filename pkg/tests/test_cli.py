import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fredfam.cli import RunResult, emit_plot_data, main, run_scenario
from fredfam.errors import SchemaError
from fredfam.schema import family_to_config, parse_scenario, read_config, build_family
from fredfam.weyl import ComplexGrid, GridSet

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = sorted((ROOT / "scenarios").glob("*.toml"))

TWO_COMPONENT = {
    "name": "two",
    "kind": "index",
    "family": {
        "space": {"vertices": [0, 1]},
        "assignment": {
            "0": {"kind": "toeplitz", "coeffs": [[1, 1.0, 0.0]]},
            "1": {"kind": "toeplitz", "coeffs": [[-1, 1.0, 0.0]]},
        },
    },
}


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_bundled_scenarios_pass(path, tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", str(path), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["status"] == "pass"


def test_violated_hypothesis_is_inconclusive(tmp_path):
    out = tmp_path / "r.json"
    code = main(["run", str(ROOT / "scenarios/inconclusive/limits_commuting_violated.toml"), "--out", str(out)])
    doc = json.loads(out.read_text())
    assert code == 2 and doc["status"] == "inconclusive"
    assert "HypothesisViolation" in doc["detail"]


def test_index_payload():
    res = run_scenario(TWO_COMPONENT)
    assert res.status == "pass" and res.payload == {"index": {"0": -1, "1": 1}}


def test_expectation_mismatch_fails():
    res = run_scenario({**TWO_COMPONENT, "expect": {"0": 1, "1": 1}})
    assert res.status == "fail" and res.exit_code == 1


def test_output_is_deterministic():
    path = ROOT / "scenarios/weyl_shift.toml"
    a = subprocess.run([sys.executable, "-m", "fredfam.cli", "run", str(path)], capture_output=True, check=True)
    b = subprocess.run([sys.executable, "-m", "fredfam.cli", "run", str(path)], capture_output=True, check=True)
    assert a.stdout == b.stdout
    doc = json.loads(a.stdout)
    assert doc["schema_version"] == 1 and len(doc["provenance"]["config_sha256"]) == 64


def test_schema_error_reports_field_path():
    bad = json.loads(json.dumps(TWO_COMPONENT))
    bad["family"]["assignment"]["0"]["coeffs"] = "z"
    res = run_scenario(bad)
    assert res.status == "error" and res.exit_code == 3
    assert "family.assignment.0.coeffs" in res.detail


def test_unknown_key_rejected():
    with pytest.raises(SchemaError, match="colour"):
        parse_scenario({**TWO_COMPONENT, "colour": "red"})


def test_missing_block_for_kind():
    with pytest.raises(SchemaError, match="grid"):
        parse_scenario({**TWO_COMPONENT, "kind": "weyl"})


def test_module_error_surfaces_with_scenario_name():
    fam = json.loads(json.dumps(TWO_COMPONENT))
    fam["family"]["space"]["edges"] = [[0, 1]]
    res = run_scenario(fam)
    assert res.status == "error" and "'two'" in res.detail


def test_family_config_round_trip():
    cfg = parse_scenario(TWO_COMPONENT)
    fam = build_family(cfg.family)
    again = parse_scenario({**TWO_COMPONENT, "family": family_to_config(fam)})
    assert family_to_config(build_family(again.family)) == family_to_config(fam)


def test_unreadable_config(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("name = ")
    assert main(["run", str(bad)]) == 3


def test_grid_plot_csv(tmp_path):
    out, plot = tmp_path / "r.json", tmp_path / "p.csv"
    assert main(["run", str(ROOT / "scenarios/weyl_shift.toml"), "--out", str(out), "--plot", str(plot)]) == 0
    rows = plot.read_text().splitlines()
    assert rows[0] == "re,im,member"
    inside = {tuple(map(float, r.split(",")[:2])) for r in rows[1:] if r.endswith(",1")}
    assert (0.0, 0.0) in inside and (1.5, 0.0) not in inside
    assert len(inside) == json.loads(out.read_text())["payload"]["weyl"]["count"]


def test_curve_plot_csv(tmp_path):
    plot = tmp_path / "p.csv"
    cfg = {**TWO_COMPONENT, "kind": "spectral-map", "poly": {"coeffs": [[0, 0], [1, 0]]}}
    cfg["family"] = {"space": {"vertices": [0]}, "assignment": {"0": TWO_COMPONENT["family"]["assignment"]["0"]}}
    emit_plot_data(run_scenario(cfg), plot)
    rows = plot.read_text().splitlines()
    assert rows[0] == "re,im"
    pts = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    assert len(pts) == 2048 and np.allclose(np.hypot(pts[:, 0], pts[:, 1]), 1.0)


def test_empty_gridset_plot_is_header_only(tmp_path):
    grid = ComplexGrid.square(1, 0.5)
    plot = tmp_path / "p.csv"
    emit_plot_data(RunResult("e", "weyl", "pass", plot=GridSet(grid)), plot)
    rows = plot.read_text().splitlines()
    assert rows[0] == "re,im,member" and all(r.endswith(",0") for r in rows[1:])


def test_non_plottable_payload(tmp_path):
    with pytest.raises(SchemaError):
        emit_plot_data(run_scenario(TWO_COMPONENT), tmp_path / "p.csv")
    assert main(["run", str(ROOT / "scenarios/index_cycle.toml"), "--out", str(tmp_path / "r.json"), "--plot", str(tmp_path / "p.csv")]) == 3
