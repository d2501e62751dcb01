import csv
import io
import json
import subprocess
import sys

import pytest

from protectq import cli, spectrum as spc
from protectq.errors import NumericalFailureError


def run(args, tmp_path=None):
    buf = io.StringIO()
    code = cli.run(args, stdout=buf)
    return code, buf.getvalue()


def test_presets_list():
    code, text = run(["presets", "list"])
    assert code == 0
    names = {r["name"] for r in csv.DictReader(io.StringIO(text))}
    assert names == {"transmon", "blochnium", "heavy-fluxonium", "bifluxon-ideal", "bifluxon-realized",
                     "zeropi-ideal", "zeropi-realized", "hybrid-cos2theta"}


def test_presets_show_round_trips():
    code, text = run(["presets", "show", "blochnium"])
    assert code == 0 and "model.E_L = 0.067" in text


def test_transmon_sweep_101_rows():
    code, text = run(["sweep", "--preset", "transmon", "--param", "n_gate", "--from", "0", "--to", "1",
                      "--points", "101", "--threads", "1"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(text)))
    assert len(rows) == 102
    head = rows[0]
    assert head[0] == "n_gate" and head[1:7] == [f"E{i}" for i in range(6)] and "E01" in head
    e01 = float(rows[1][head.index("E01")])
    assert e01 == pytest.approx(-11.7734806 + 17.22250771, abs=1e-7)


def test_spectrum_json_file(tmp_path):
    out = tmp_path / "s.json"
    code, text = run(["spectrum", "--preset", "blochnium", "--format", "json", "--out", str(out), "--k", "4"])
    assert code == 0 and text.startswith("spectrum:")
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["data"][0]["E01"] == pytest.approx(1.80459441, abs=1e-7)
    assert (tmp_path / "s.json.config").read_text().startswith("model.")


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model.family = charge\nmodel.E_C = 0.2\nmodel.E_J = 5\ntask.command = spectrum\n")
    _, a = run(["spectrum", "--config", str(cfg), "--k", "3"])
    _, b = run(["spectrum", "--config", str(cfg), "--k", "3", "--E_J", "20"])
    _, c = run(["spectrum", "--config", str(cfg), "--k", "3", "--set", "model.E_J=20"])
    _, d = run(["spectrum", "--preset", "transmon", "--k", "3"])
    assert a != b and b == c == d


def test_units_flag():
    _, ghz = run(["spectrum", "--preset", "transmon", "--k", "2"])
    _, rad = run(["spectrum", "--preset", "transmon", "--k", "2", "--units", "rad_s"])
    g = list(csv.DictReader(io.StringIO(ghz)))[0]
    r = list(csv.DictReader(io.StringIO(rad)))[0]
    assert float(r["E01"]) == pytest.approx(float(g["E01"]) * 2 * 3.141592653589793e9, rel=1e-10)


@pytest.mark.parametrize("args", [
    ["spectrum", "--preset", "transmon", "--E_C", "-1"],
    ["spectrum", "--preset", "nowhere"],
    ["fly"],
    [],
    ["sweep", "--preset", "transmon"],
    ["spectrum", "--preset", "transmon", "--threads", "0"],
    ["spectrum", "--preset", "transmon", "--set", "model.bogus=1"],
    ["spectrum", "--config", "/nonexistent/run.cfg"],
])
def test_config_errors_exit_2(args, capsys):
    assert run(args)[0] == 2
    assert capsys.readouterr().err.startswith("error:")


def test_output_error_exit_2(tmp_path, capsys):
    code, _ = run(["spectrum", "--preset", "transmon", "--out", str(tmp_path / "x" / "y.csv")])
    assert code == 2 and "y.csv" in capsys.readouterr().err


def test_numerical_failure_exit_3(monkeypatch, capsys):
    def boom(*a, **k):
        raise NumericalFailureError("solver stalled", residual=1e-3)

    monkeypatch.setattr(spc, "converge", boom)
    assert run(["spectrum", "--preset", "transmon"])[0] == 3
    err = capsys.readouterr().err
    assert err.startswith("error: numerical failure") and "residual" in err


def test_unconverged_exit_4_keeps_output(monkeypatch, tmp_path):
    real = spc.converge

    def stuck(*a, **k):
        sol = real(*a, **k)
        sol.converged = False
        return sol

    monkeypatch.setattr(spc, "converge", stuck)
    out = tmp_path / "s.csv"
    assert run(["spectrum", "--preset", "transmon", "--out", str(out)])[0] == 4
    assert out.read_text().splitlines()[1].endswith("false")


def test_validate_zero_pi_ideal():
    code, text = run(["validate", "--preset", "zeropi-ideal"])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 5 and max(float(r["difference"]) for r in rows) < 1e-6 * 1.0


def test_coherence_report():
    code, text = run(["coherence", "--preset", "transmon"])
    rows = list(csv.DictReader(io.StringIO(text)))
    grades = {(r["channel"], r["error"]): r["grade"] for r in rows}
    assert code == 0
    assert grades[("charge", "dephasing")] == "exponential"
    assert grades[("flux", "dephasing")] == "not_applicable"
    assert grades[("charge_operators", "relaxation")] == "absent"


def test_wavefunction_two_mode():
    code, text = run(["wavefunction", "--preset", "zeropi-ideal", "--points-per-axis", "24", "--format", "json"])
    doc = json.loads(text)
    assert code == 0 and len(doc["data"]) == 24 * 24
    assert set(doc["data"][0]) == {"theta", "phi", "re", "im", "density"}


def test_phase_diagram_json(tmp_path):
    out = tmp_path / "pd.json"
    code, _ = run(["phase-diagram", "--mode", "flux", "--ej-from", "1", "--ej-to", "10", "--ej-points", "2",
                   "--el-from", "0.01", "--el-to", "0.1", "--el-points", "2", "--format", "json", "--out", str(out),
                   "--threads", "1"])
    assert code == 0 and len(json.loads(out.read_text())["data"]) == 4


def test_thread_count_does_not_change_bytes(tmp_path):
    args = ["sweep", "--preset", "heavy-fluxonium", "--param", "phi_ext", "--from", "0", "--to", "0.5",
            "--points", "7", "--k", "4"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--threads", "1", "--out", str(a)])[0] == 0
    assert run(args + ["--threads", "4", "--out", str(b)])[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_env_thread_fallback(monkeypatch):
    monkeypatch.setenv("PROTECTQ_THREADS", "2")
    assert run(["spectrum", "--preset", "transmon", "--k", "2"])[0] == 0
    monkeypatch.setenv("PROTECTQ_THREADS", "many")
    assert run(["spectrum", "--preset", "transmon", "--k", "2"])[0] == 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "protectq", "presets", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "hybrid-cos2theta" in r.stdout
