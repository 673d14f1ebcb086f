import csv
import io
import json
import subprocess
import sys

import pytest

from rpe3bp import diffusion as dif
from rpe3bp.cli import run


def _csv_rows(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def test_harmonics_csv(capsys):
    assert run(["melnikov", "harmonics", "--mu", "0.3", "--i", "3", "--eps", "0", "--lmax", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# rpe3bp melnikov harmonics\n# config: ")
    rows = _csv_rows(out)
    assert len(rows) == 1
    assert abs(float(rows[0]["abs_L1"]) / 3.75e-6 - 1) < 0.35


def test_bad_mass_ratio(capsys):
    assert run(["melnikov", "harmonics", "--mu", "0.6", "--i", "3"]) == 2
    err = capsys.readouterr().err
    assert "mu = 0.6" in err and "valid range" in err


@pytest.mark.parametrize("argv", [
    ["orbit", "integrate", "--bogus"],
    ["melnikov", "eval", "--i", "1"],
    ["drift", "control", "--steps", "0"],
    ["drift", "export"],
    ["primaries", "table", "--eps", "1.0"],
    ["nonsense", "table"],
])
def test_input_errors_exit_2(argv, capsys):
    assert run(argv) == 2


def test_config_layering(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('mu = 0.2\nn = 3\n[primaries]\neps = 0.1\n[primaries.table]\nn = 4\n')
    assert run(["primaries", "table", "--config", str(cfg), "--n", "5"]) == 0
    out = capsys.readouterr().out
    conf = json.loads(out.splitlines()[1][len("# config: "):])
    assert conf["mu"] == 0.2 and conf["eps"] == 0.1 and conf["n"] == 5
    assert len(_csv_rows(out)) == 5


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"wrong": 1}')
    assert run(["primaries", "table", "--config", str(cfg)]) == 2


def test_json_output(capsys):
    assert run(["potential", "profile", "--n", "11", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["command"] == "potential profile" and len(doc["rows"]) == 11


def test_reproducible_bytes(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"o{k}.csv"
        assert run(["orbit", "integrate", "--eps", "0.05", "--t1", "20", "--n-out", "21",
                    "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_svg_written(tmp_path, capsys):
    svg = tmp_path / "p.svg"
    assert run(["melnikov", "eval", "--n-sigma", "6", "--n-theta", "5", "--svg", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and "<rect" in text


def test_drift_plan_and_export(tmp_path, capsys):
    path = tmp_path / "chain.json"
    argv = ["drift", "plan", "--mu", "0.3", "--eps", "0.05", "--i0", "3.0", "--target", "3.05",
            "--i-lo", "2.5", "--i-hi", "4.0", "--n-i", "32", "--out", str(path)]
    assert run(argv) == 0
    summary = capsys.readouterr().out
    assert "status=reached" in summary
    doc = json.loads(path.read_text())
    assert doc["schema"] == dif.SCHEMA and doc["meta"]["status"] == "reached"
    chain = dif.load_pseudo_orbit(path)
    assert chain.end.i >= 3.05
    assert run(["drift", "export", "--input", str(path)]) == 0
    rows = _csv_rows(capsys.readouterr().out)
    assert len(rows) == len(chain) + 1 and float(rows[-1]["I"]) == chain.end.i


def test_drift_plan_circular_fails(capsys):
    argv = ["drift", "plan", "--eps", "0", "--budget", "2000", "--n-i", "16", "--format", "json"]
    assert run(argv) == 0
    cap = capsys.readouterr()
    assert "status=budget_exhausted" in cap.err
    assert json.loads(cap.out)["meta"]["status"] == "budget_exhausted"


def test_scatter_shoot_record(capsys):
    assert run(["scatter", "shoot", "--i", "3", "--eps", "0", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    res = doc["result"]
    assert {"incoming", "outgoing", "diagnostics"} <= set(res)


def test_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "rpe3bp", "primaries", "table", "--n", "2"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and proc.stdout.startswith("# rpe3bp primaries table")
