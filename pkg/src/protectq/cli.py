"""``protectq`` command line.

Every subcommand builds a ``RunConfig`` from an optional ``--config`` file
overlaid with flags, runs the task, writes CSV or JSON and prints a one-line
summary.  Exit codes: 0 success, 2 configuration or input error, 3 numerical
failure, 4 unconverged (output still written).  Diagnostics go to stderr,
prefixed with ``error:``.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from . import coherence as coh
from . import models as mdl
from . import presets
from . import spectrum as spc
from .config import RunConfig, build_model, dump_config, parse_value, read_file, read_raw, resolve_checked
from .errors import ConfigError, NumericalFailureError, ProtectqError
from .output import Table, emit, OutputError, write_text

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNCONVERGED = 0, 2, 3, 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# flag dest -> config key
_FLAG_KEYS = {
    "preset": "model.preset",
    "family": "model.family",
    "E_C": "model.E_C",
    "E_J": "model.E_J",
    "E_L": "model.E_L",
    "E_C_theta": "model.E_C_theta",
    "E_C_phi": "model.E_C_phi",
    "n_gate": "model.n_gate",
    "phi_ext": "model.phi_ext",
    "k": "task.k",
    "tol": "task.tol",
    "param": "task.param",
    "start": "task.start",
    "stop": "task.stop",
    "points": "task.points",
    "param2": "task.param2",
    "start2": "task.start2",
    "stop2": "task.stop2",
    "points2": "task.points2",
    "mode": "task.mode",
    "ej_start": "task.ej_start",
    "ej_stop": "task.ej_stop",
    "ej_points": "task.ej_points",
    "el_start": "task.el_start",
    "el_stop": "task.el_stop",
    "el_points": "task.el_points",
    "pd_E_C": "task.E_C",
    "level": "task.level",
    "points_per_axis": "task.points_per_axis",
    "format": "output.format",
    "out": "output.path",
    "precision": "output.precision",
    "units": "output.units",
}


def _common(p: argparse.ArgumentParser, model=True):
    p.add_argument("--config", help="key = value run configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--threads", help="worker processes (default: PROTECTQ_THREADS or CPU count)")
    p.add_argument("--format", choices=None, help="csv or json")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--precision", help="significant digits")
    p.add_argument("--units", help="ghz (default) or rad_s")
    if model:
        p.add_argument("--preset")
        p.add_argument("--family")
        for name in ("E_C", "E_J", "E_L", "E_C_theta", "E_C_phi"):
            p.add_argument(f"--{name}", dest=name)
        p.add_argument("--n-gate", dest="n_gate")
        p.add_argument("--phi-ext", dest="phi_ext")
        p.add_argument("--k")
        p.add_argument("--tol")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="protectq", description="Spectra and noise protection of superconducting circuits.")
    top.add_argument("--version", action="version", version=f"protectq {__version__}")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)

    _common(sub.add_parser("spectrum", help="lowest levels at one control point"))

    p = sub.add_parser("sweep", help="levels over a 1D or 2D parameter grid")
    _common(p)
    for suffix in ("", "2"):
        p.add_argument(f"--param{suffix}", dest=f"param{suffix}")
        p.add_argument(f"--from{suffix}", dest=f"start{suffix}")
        p.add_argument(f"--to{suffix}", dest=f"stop{suffix}")
        p.add_argument(f"--points{suffix}", dest=f"points{suffix}")

    p = sub.add_parser("phase-diagram", help="single-mode slope / matrix-element landscape")
    _common(p, model=False)
    p.add_argument("--mode")
    for axis in ("ej", "el"):
        p.add_argument(f"--{axis}-from", dest=f"{axis}_start")
        p.add_argument(f"--{axis}-to", dest=f"{axis}_stop")
        p.add_argument(f"--{axis}-points", dest=f"{axis}_points")
    p.add_argument("--E_C", dest="pd_E_C")
    p.add_argument("--tol")

    _common(sub.add_parser("coherence", help="susceptibilities and protection grades at the operating point"))

    p = sub.add_parser("wavefunction", help="eigenstate amplitudes on a phase grid")
    _common(p)
    p.add_argument("--level")
    p.add_argument("--points-per-axis", dest="points_per_axis")

    _common(sub.add_parser("validate", help="basis expansion vs real-space grid"))

    p = sub.add_parser("presets", help="list or show presets")
    _common(p, model=False)
    p.add_argument("action", nargs="?", default="list", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    return top


def _workers(arg) -> int:
    if arg is not None:
        try:
            n = int(arg)
        except ValueError:
            raise ConfigError([f"--threads: cannot parse {arg!r}"]) from None
        if n < 1:
            raise ConfigError(["--threads: must be at least 1"])
        return n
    return spc.default_workers()


def _config_from(ns) -> RunConfig:
    raw: Dict[str, object] = {}
    problems: List[str] = []
    if ns.config:
        raw, problems = read_raw(read_file(ns.config), ns.config)
    if getattr(ns, "preset", None) is not None:
        # a preset flag replaces the whole model section of the file
        raw = {k: v for k, v in raw.items() if not k.startswith("model.") or k.startswith("model.basis.")}
    for dest, key in _FLAG_KEYS.items():
        text = getattr(ns, dest, None)
        if text is None:
            continue
        try:
            raw[key] = parse_value(key, str(text))
        except ConfigError as e:
            problems += e.problems
    for item in ns.set:
        if "=" not in item:
            problems.append(f"--set {item!r}: expected KEY=VALUE")
            continue
        key, text = (x.strip() for x in item.split("=", 1))
        try:
            raw[key] = parse_value(key, text)
        except ConfigError as e:
            problems += e.problems
    raw["task.command"] = ns.command
    return resolve_checked(raw, problems)


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------

def _energy_columns(k):
    return [f"E{i}" for i in range(k)] + ["E01"]


def _energy_powers(cols):
    return {c: 1 for c in cols}


def _task_spectrum(cfg, model, workers):
    k, tol = cfg["task.k"], cfg["task.tol"]
    sol = spc.converge(model, k, tol) if not _basis_overridden(cfg) else spc.eigensolve(model, k)
    if _basis_overridden(cfg):
        sol.converged = True
    cols = ["n_gate", "phi_ext"] + _energy_columns(k) + ["converged"]
    row = [model.point.n_gate, model.point.phi_ext] + list(sol.energies) + [sol.e01, bool(sol.converged)]
    t = Table(cols, [row], [], _energy_powers(_energy_columns(k)), {"dim": sol.model.dim})
    return t, bool(sol.converged), f"spectrum: {model.family} E01={sol.e01:.9g} GHz dim={sol.model.dim}"


def _basis_overridden(cfg) -> bool:
    return any(cfg[f"model.basis.{x}"] is not None for x in ("cutoff", "levels", "points"))


def _grid(start, stop, n):
    return np.linspace(start, stop, n)


def _task_sweep(cfg, model, workers):
    k, tol = cfg["task.k"], cfg["task.tol"]
    names = [cfg["task.param"]]
    grids = [_grid(cfg["task.start"], cfg["task.stop"], cfg["task.points"])]
    if cfg["task.param2"] is not None:
        names.append(cfg["task.param2"])
        grids.append(_grid(cfg["task.start2"], cfg["task.stop2"], cfg["task.points2"]))
    table = spc.sweep(model, names, grids, k=k, tol=tol, workers=workers, fixed_basis=_basis_overridden(cfg))
    coords = table.coordinates()
    rows = [list(c) + list(e) + [e[1] - e[0], bool(ok)]
            for c, e, ok in zip(coords, table.energies, table.converged)]
    ecols = _energy_columns(k)
    powers = _energy_powers(ecols)
    for n in names:
        if n.startswith("E_") or n == "delta":
            powers[n] = 1
    t = Table(names + ecols + ["converged"], rows, [(n, list(g)) for n, g in table.axes], powers)
    ok = bool(np.all(table.converged))
    return t, ok, f"sweep: {len(rows)} points over {', '.join(names)}, converged={str(ok).lower()}"


def _task_phase_diagram(cfg, model, workers):
    mode = cfg["task.mode"]
    x = np.logspace(np.log10(cfg["task.ej_start"]), np.log10(cfg["task.ej_stop"]), cfg["task.ej_points"])
    y = None
    if mode == "flux":
        y = np.logspace(np.log10(cfg["task.el_start"]), np.log10(cfg["task.el_stop"]), cfg["task.el_points"])
    pd = coh.phase_diagram(mode, x, y, E_C=cfg["task.E_C"], tol=cfg["task.tol"], workers=workers)
    cols = ["ej_ec", "el_ec", "slope", "element", "coupling", "log10_slope", "log10_element", "converged"]
    rows = []
    for a, b, s, e, c, ok in pd.cells():
        rows.append([a, b, s, e, c, _log10(s), _log10(e), ok])
    axes = [("ej_ec", list(x))] + ([("el_ec", list(y))] if y is not None else [])
    t = Table(cols, rows, axes, {"slope": 1, "coupling": 1}, {"mode": mode, "E_C": pd.E_C})
    ok = bool(np.all(pd.converged))
    return t, ok, f"phase-diagram: {mode} mode, {len(rows)} cells, converged={str(ok).lower()}"


def _log10(v):
    return float(np.log10(v)) if v > 0 and np.isfinite(v) else float("nan")


def _task_coherence(cfg, model, workers):
    tol = max(cfg["task.tol"], 1e-9)
    report = coh.protection_report(model, tol=tol, workers=workers)
    sol = spc.converge(model, 4, tol)
    cols = ["channel", "error", "slope", "exponent", "element", "susceptibility", "grade"]
    rows = []
    for ch in mdl.CHANNELS:
        m = report.metrics.get(ch)
        if m is None:
            rows.append([ch, "dephasing", None, None, None, None, "not_applicable"])
            continue
        rows.append([ch, "dephasing", m["slope"], m["eta"], None, m["slope"] ** 2, getattr(report.grade, ch)])
        elem = abs(spc.matrix_element(sol, mdl.noise_coupling(sol.model, ch), 0, 1))
        rows.append([ch, "relaxation", None, None, elem, elem ** 2, None])
    rows.append(["charge_operators", "relaxation", None, report.metrics["relaxation"]["zeta"], None, None,
                 report.grade.t1])
    t = Table(cols, rows, [], {"slope": 1, "element": 1, "susceptibility": 2},
              {"e01": sol.e01, "thresholds": {"exponent": report.grade.thresholds.exponent,
                                               "slope": report.grade.thresholds.slope}})
    g = report.grade.as_dict()
    summary = "coherence: " + " ".join(f"{k}={v}" for k, v in g.items())
    return t, report.converged, summary


def _task_wavefunction(cfg, model, workers):
    level, n = cfg["task.level"], cfg["task.points_per_axis"]
    k = max(cfg["task.k"], level + 1)
    sol = spc.converge(model, k, cfg["task.tol"]) if not _basis_overridden(cfg) else spc.eigensolve(model, k)
    if model.n_modes == 2:
        theta = np.linspace(-np.pi, np.pi, n, endpoint=False)
        phi = np.linspace(-3 * np.pi, 3 * np.pi, n) + model.phase_offset
        wf = spc.wavefunction(sol, level, theta=theta, phi=phi)
        tt, pp = np.meshgrid(theta, phi, indexing="ij")
        coords = [tt.ravel(), pp.ravel()]
        names = ["theta", "phi"]
    else:
        if isinstance(model.bases[0], mdl.ChargeBasis) or isinstance(model.spec, (mdl.ChargeModeSpec,
                                                                                   mdl.HybridJunctionSpec)):
            x = np.linspace(-np.pi, np.pi, n, endpoint=False)
        else:
            x = np.linspace(-4 * np.pi, 4 * np.pi, n) + model.phase_offset
        wf = spc.wavefunction(sol, level, phase=x)
        coords, names = [x], ["phase"]
    amp = wf.amplitudes.ravel()
    rows = [list(c) + [a.real, a.imag, abs(a) ** 2] for c, a in zip(zip(*coords), amp)]
    t = Table(names + ["re", "im", "density"], rows, [(n_, list(np.unique(c))) for n_, c in zip(names, coords)],
              {}, {"level": level, "energy": float(sol.energies[level]), "raw_norm": wf.raw_norm})
    return t, bool(sol.converged), f"wavefunction: level {level}, {len(rows)} samples, captured norm {wf.raw_norm:.6f}"


def _task_validate(cfg, model, workers):
    k = min(cfg["task.k"], 5) if cfg["task.k"] else 5
    rep = spc.cross_validate(model, k=k, tol=cfg["task.tol"])
    rows = [[i, b, g, abs(b - g)] for i, (b, g) in enumerate(zip(rep.basis_energies, rep.grid_energies))]
    t = Table(["level", "basis", "grid", "difference"], rows, [], {"basis": 1, "grid": 1, "difference": 1},
              {"discrepancy": rep.discrepancy, "basis_converged": rep.basis_converged})
    summary = (f"validate: discrepancy={rep.discrepancy:.3e} basis_converged={str(rep.basis_converged).lower()} "
               f"agrees={str(rep.agrees).lower()}")
    return t, rep.agrees and rep.basis_converged, summary


def _task_presets(cfg, ns):
    if ns.action == "show":
        if not ns.name:
            raise ConfigError(["presets show: name a preset"])
        p = presets.get(ns.name)
        return None, dump_config(resolve_checked({"model.preset": p.name, "task.command": "spectrum"}, []))
    cols = ["name", "figure", "family", "parameters", "n_gate", "phi_ext", "note"]
    rows = []
    for p in presets.PRESETS.values():
        params = "; ".join(f"{k}={v}" for k, v in vars(p.spec).items())
        rows.append([p.name, p.figure, mdl._FAMILY[type(p.spec)], params, p.point.n_gate, p.point.phi_ext, p.note])
    return Table(cols, rows), f"presets: {len(rows)} available"


_TASKS = {
    "spectrum": _task_spectrum,
    "sweep": _task_sweep,
    "phase-diagram": _task_phase_diagram,
    "coherence": _task_coherence,
    "wavefunction": _task_wavefunction,
    "validate": _task_validate,
}


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def run(argv: Optional[List[str]] = None, stdout=None) -> int:
    """Entry point; returns the exit code instead of exiting."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except _UsageError as e:
        _err(str(e))
        return EXIT_CONFIG
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    if ns.command is None:
        _err("missing subcommand; choose from spectrum, sweep, phase-diagram, coherence, wavefunction, "
             "validate, presets")
        return EXIT_CONFIG
    try:
        workers = _workers(ns.threads if ns.threads is not None else os.environ.get("PROTECTQ_THREADS"))
        cfg = _config_from(ns)
        path, fmt, prec = cfg["output.path"], cfg["output.format"], cfg["output.precision"]
        echo = {k: v for k, v in cfg.values if v is not None}
        if ns.command == "presets":
            table, msg = _task_presets(cfg, ns)
            if table is None:
                stdout.write(msg)
                return EXIT_OK
            emit(table, fmt, prec, path, echo, __version__, stream=stdout)
            if path:
                print(msg, file=stdout)
            return EXIT_OK
        model = build_model(cfg) if ns.command != "phase-diagram" else None
        table, ok, summary = _TASKS[ns.command](cfg, model, workers)
        table = table.converted(cfg["output.units"])
        emit(table, fmt, prec, path, echo, __version__, stream=stdout)
        if path:
            write_text(str(path) + ".config", dump_config(cfg))
            print(summary, file=stdout)
        else:
            print(summary, file=sys.stderr)
        if not ok:
            _err("results not converged (partial output written)" if ns.command != "validate"
                 else "oracle discrepancy above 1e-6 or basis not converged")
            return EXIT_UNCONVERGED
        return EXIT_OK
    except ConfigError as e:
        for p in e.problems:
            _err(p)
        return EXIT_CONFIG
    except OutputError as e:
        _err(str(e))
        return EXIT_CONFIG
    except NumericalFailureError as e:
        extra = f" (residual {e.residual:.3e})" if e.residual is not None else ""
        _err(f"numerical failure: {e}{extra}")
        return EXIT_NUMERIC
    except ProtectqError as e:
        _err(str(e))
        return EXIT_CONFIG
    except (MemoryError, ArithmeticError) as e:
        _err(f"numerical failure: {e}")
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())
