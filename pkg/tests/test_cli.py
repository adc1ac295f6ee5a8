import csv
import json
import subprocess
import sys

import pytest

from semihyp import cli
from semihyp.presets import PRESETS, preset


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_cfg(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.mark.parametrize("name", PRESETS)
def test_validate_presets(capsys, name):
    code, out, _ = run(capsys, "validate", "--preset", name)
    assert code == 0 and "validation: ok" in out


def test_solve_writes_csv(capsys, tmp_path):
    out_csv = tmp_path / "cw.csv"
    code, out, _ = run(capsys, "solve", "--preset", "circulating-wave", "--set", "grid.nx=20",
                       "--t", "0.5", "--derivatives", "--out", str(out_csv))
    assert code == 0 and "slab plan:" in out
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["x", "t", "u1", "u2", "du1dx", "du2dx", "du1dt", "du2dt"]
    assert len(rows) - 1 == 21 * (1 + 16)  # levels per slab at one separation-width slab


def test_solve_json_and_plot(capsys, tmp_path):
    out_json, plot = tmp_path / "c.json", tmp_path / "plot.csv"
    code, _, _ = run(capsys, "solve", "--preset", "constant", "--set", "grid.nx=10",
                     "--set", "output.format=\"json\"", "--t", "0.25",
                     "--out", str(out_json), "--emit-plot", str(plot))
    assert code == 0
    doc = json.loads(out_json.read_text())
    assert len(doc["x"]) == 11 and doc["u"][0][0][0] == 0.75
    lines = plot.read_text().splitlines()
    assert lines[0] == "x,t,component,value" and len(lines) == 1 + 2 * 11 * len(doc["t"])


def test_riccati_past_blowup_fails_with_hint(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--preset", "riccati", "--set", "grid.nx=20",
                       "--out", str(tmp_path / "r.csv"))
    assert code == 1 and "blowup" in err


def test_sign_change_is_semantic_failure(capsys):
    code, out, _ = run(capsys, "validate", "--preset", "constant",
                       "--set", 'problem.lambda=["x-0.5", "1"]')
    assert code == 1 and "FAILED" in out


def test_wrong_length_is_schema_error(capsys):
    code, _, err = run(capsys, "validate", "--preset", "constant", "--set", 'problem.f=["0"]')
    assert code == 2 and "problem" in err


def test_unknown_key_names_path(capsys):
    code, _, err = run(capsys, "solve", "--preset", "constant", "--set", "grid.bogus=1")
    assert code == 2 and "grid.bogus" in err


def test_unknown_key_in_file(capsys, tmp_path):
    doc = preset("constant")
    doc["solver"]["tolerance"] = 1e-3
    code, _, err = run(capsys, "validate", "--config", write_cfg(tmp_path, doc))
    assert code == 2 and "solver.tolerance" in err


def test_parse_error_is_schema_error(capsys):
    code, _, err = run(capsys, "validate", "--preset", "constant",
                       "--set", 'problem.f=["u1+", "0"]')
    assert code == 2 and "position" in err


def test_config_source_required(capsys):
    code, _, _ = run(capsys, "validate")
    assert code == 2
    code, _, _ = run(capsys, "validate", "--preset", "sin", "--config", "x.json")
    assert code == 2


def test_dump_config_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--preset", "sin", "--set", "grid.nx=64",
                       "--dump-config")
    assert code == 0
    doc = json.loads(out)
    assert doc["grid"]["nx"] == 64 and doc["problem"]["lambda"] == ["-1", "1"]
    code, again, _ = run(capsys, "solve", "--config", write_cfg(tmp_path, doc), "--dump-config")
    assert code == 0 and again == out


def test_bounds_reports_theta(capsys, tmp_path):
    code, out, _ = run(capsys, "bounds", "--preset", "sin", "--out", str(tmp_path / "b.json"))
    assert code == 0
    doc = json.loads((tmp_path / "b.json").read_text())
    assert doc["apriori"]["theta0"] == pytest.approx(1 / 12)
    assert doc["lipschitz"]["lattice"]["density"] == 21


def test_certify(capsys, tmp_path):
    code, out, _ = run(capsys, "certify", "--preset", "sin", "--out", str(tmp_path / "c.json"))
    assert code == 0 and "THM1" in out
    code, _, err = run(capsys, "certify", "--preset", "constant")
    assert code == 2 and "certificate" in err


def test_blowup_command(capsys, tmp_path):
    code, out, _ = run(capsys, "blowup", "--preset", "riccati", "--set", "grid.nx=10",
                       "--set", "blowup.u_max=100", "--out", str(tmp_path / "b.json"))
    assert code == 0 and "BLOWUP_DETECTED" in out
    doc = json.loads((tmp_path / "b.json").read_text())
    assert abs(doc["t_star"] - 1.0) < 0.05 and len(doc["history"]) == len(doc["widths"]) + 1


def test_scan_csv(capsys, tmp_path):
    doc = preset("constant")
    doc["scan"] = {"families": [{"family": "power", "params": {"q": [1.0, 1.5, 2.0]}}]}
    doc["grid"]["nx"] = 10
    doc["blowup"] = {"u_max": 100.0, "t_max": 2.0}
    out_csv = tmp_path / "scan.csv"
    code, _, _ = run(capsys, "scan", "--config", write_cfg(tmp_path, doc), "--out", str(out_csv))
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert [r["params"] for r in rows] == ["c=1.0;q=1.0", "c=1.0;q=1.5", "c=1.0;q=2.0"]
    assert [r["verdict"] for r in rows] == ["COMPLETED", "BLOWUP_DETECTED", "BLOWUP_DETECTED"]


def test_outputs_are_deterministic(capsys, tmp_path):
    paths = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        run(capsys, "solve", "--preset", "sin", "--set", "grid.nx=20", "--t", "0.3",
            "--derivatives", "--out", str(path))
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "semihyp", "solve", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    for flag in ("--config", "--preset", "--set", "--t", "--derivatives", "--out",
                 "--emit-plot", "--dump-config"):
        assert flag in res.stdout


def test_console_script_exit_code():
    res = subprocess.run([sys.executable, "-m", "semihyp", "validate", "--preset", "constant",
                          "--set", "grid.bogus=1"], capture_output=True, text=True)
    assert res.returncode == 2
