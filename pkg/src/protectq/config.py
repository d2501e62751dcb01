"""Run configuration: a line-oriented ``section.key = value`` format.

Example::

    # transmon charge dispersion
    model.preset = transmon
    task.command = sweep
    task.param = n_gate
    task.start = 0
    task.stop = 1
    task.points = 101
    output.format = csv

Blank lines and ``#`` comments are ignored.  Parsing collects every problem
(unknown keys, bad types, constraint violations) and raises them together
in one ``ConfigError``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

from . import models as mdl
from . import presets
from .errors import ConfigError, ProtectqError
from .models import ControlPoint
from .operators import ChargeBasis, OscillatorBasis

COMMANDS = ("spectrum", "sweep", "phase-diagram", "coherence", "wavefunction", "validate", "presets")
FAMILIES = ("charge", "flux", "two_mode", "hybrid")
PARAMS = ("n_gate", "phi_ext", "E_C", "E_J", "E_L", "E_C_theta", "E_C_phi", "delta")


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _int(s: str) -> int:
    return int(s.strip())


def _floats(s: str) -> Tuple[float, ...]:
    parts = [p for p in s.replace("[", " ").replace("]", " ").replace(",", " ").split()]
    if not parts:
        raise ValueError("empty list")
    return tuple(_float(p) for p in parts)


def _str(s: str) -> str:
    if not s:
        raise ValueError("empty value")
    return s


# key -> (parser, default, help).  None defaults mean "unset".
SCHEMA: Dict[str, Tuple[Any, Any, str]] = {
    "model.preset": (_str, None, "preset name (fills all model fields)"),
    "model.family": (_str, None, "charge | flux | two_mode | hybrid"),
    "model.flavor": (_str, None, "zero_pi | bifluxon (two_mode only)"),
    "model.E_C": (_float, None, "charging energy, GHz"),
    "model.E_J": (_float, None, "Josephson energy, GHz"),
    "model.E_L": (_float, None, "inductive energy, GHz"),
    "model.E_C_theta": (_float, None, "theta-mode charging energy, GHz"),
    "model.E_C_phi": (_float, None, "phi-mode charging energy, GHz"),
    "model.delta": (_float, None, "superconducting gap, GHz"),
    "model.transmissions_j1": (_floats, None, "channel transmissions of junction 1"),
    "model.transmissions_j2": (_floats, None, "channel transmissions of junction 2"),
    "model.n_gate": (_float, None, "offset charge, units of 2e"),
    "model.phi_ext": (_float, None, "external flux, units of the flux quantum"),
    "model.basis.cutoff": (_int, None, "charge cutoff of the (theta) charge mode"),
    "model.basis.levels": (_int, None, "oscillator levels of the extended mode"),
    "model.basis.points": (_int, None, "grid points (selects a grid basis)"),
    "task.command": (_str, None, "one of " + ", ".join(COMMANDS)),
    "task.param": (_str, None, "swept parameter"),
    "task.start": (_float, None, "first grid value"),
    "task.stop": (_float, None, "last grid value"),
    "task.points": (_int, None, "grid points"),
    "task.param2": (_str, None, "second swept parameter (2D sweep)"),
    "task.start2": (_float, None, "first value of the second grid"),
    "task.stop2": (_float, None, "last value of the second grid"),
    "task.points2": (_int, None, "points of the second grid"),
    "task.k": (_int, 6, "number of levels"),
    "task.tol": (_float, 1e-10, "basis convergence tolerance, GHz"),
    "task.level": (_int, 0, "eigenstate index (wavefunction)"),
    "task.mode": (_str, "flux", "phase-diagram mode: flux | charge"),
    "task.ej_start": (_float, 0.1, "phase diagram: first E_J/E_C"),
    "task.ej_stop": (_float, 100.0, "phase diagram: last E_J/E_C"),
    "task.ej_points": (_int, 20, "phase diagram: E_J/E_C points (log spaced)"),
    "task.el_start": (_float, 1e-3, "phase diagram: first E_L/E_C"),
    "task.el_stop": (_float, 1.0, "phase diagram: last E_L/E_C"),
    "task.el_points": (_int, 20, "phase diagram: E_L/E_C points (log spaced)"),
    "task.E_C": (_float, 1.0, "phase diagram charging energy, GHz"),
    "task.points_per_axis": (_int, 201, "wavefunction samples per phase axis"),
    "output.format": (_str, "csv", "csv | json"),
    "output.path": (_str, None, "output file (stdout when unset)"),
    "output.precision": (_int, 12, "significant digits"),
    "output.units": (_str, "ghz", "ghz | rad_s"),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration; ``values`` holds every schema key."""

    values: Tuple[Tuple[str, Any], ...]

    def __getitem__(self, key: str):
        return dict(self.values)[key]

    def get(self, key: str, default=None):
        v = dict(self.values).get(key)
        return default if v is None else v

    def section(self, name: str) -> Dict[str, Any]:
        pre = name + "."
        return {k[len(pre):]: v for k, v in self.values if k.startswith(pre)}

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        raw = {k: v for k, v in self.values if v is not None}
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return resolve(raw)


def _render(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_render(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig) -> str:
    """Resolved config in the input format; re-parses to an identical config."""
    lines = [f"{k} = {_render(v)}" for k, v in cfg.values if v is not None]
    return "\n".join(lines) + "\n"


def read_raw(text: str, source: str = "<config>") -> Tuple[Dict[str, Any], List[str]]:
    """Typed ``key -> value`` pairs of a config text, plus the line-level problems."""
    problems: List[str] = []
    raw: Dict[str, Any] = {}
    for no, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            problems.append(f"{source}:{no}: expected 'key = value'")
            continue
        key, val = (x.strip() for x in s.split("=", 1))
        if key not in SCHEMA:
            problems.append(f"{source}:{no}: unknown key {key!r}")
            continue
        if key in raw:
            problems.append(f"{source}:{no}: duplicate key {key!r}")
            continue
        try:
            raw[key] = SCHEMA[key][0](val)
        except (ValueError, TypeError, OverflowError):
            problems.append(f"{source}:{no}: {key}: cannot parse {val!r}")
    return raw, problems


def parse_value(key: str, text: str):
    """Parse one value for ``key``; raises ``ConfigError`` naming the key."""
    if key not in SCHEMA:
        raise ConfigError([f"unknown key {key!r}"])
    try:
        return SCHEMA[key][0](text)
    except (ValueError, TypeError, OverflowError):
        raise ConfigError([f"{key}: cannot parse {text!r}"]) from None


def resolve_checked(raw: Dict[str, Any], problems: List[str]) -> RunConfig:
    """``resolve`` that also reports earlier problems, all in one error."""
    if problems:
        try:
            resolve(raw)
        except ConfigError as e:
            problems = problems + e.problems
        raise ConfigError(problems)
    return resolve(raw)


def parse_text(text: str, source: str = "<config>") -> RunConfig:
    raw, problems = read_raw(text, source)
    return resolve_checked(raw, problems)


def read_file(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError([f"{path}: cannot read config ({e})"]) from None


def parse_config(path) -> RunConfig:
    return parse_text(read_file(path), str(path))


def _preset_values(name: str) -> Dict[str, Any]:
    p = presets.get(name)
    out: Dict[str, Any] = {"model.family": mdl._FAMILY[type(p.spec)]}
    for f in dataclasses.fields(p.spec):
        out[f"model.{f.name}"] = getattr(p.spec, f.name)
    out["model.n_gate"] = p.point.n_gate
    out["model.phi_ext"] = p.point.phi_ext
    return out


_FAMILY_FIELDS = {
    "charge": ("E_C", "E_J"),
    "flux": ("E_C", "E_J", "E_L"),
    "two_mode": ("E_C_theta", "E_C_phi", "E_J", "E_L"),
    "hybrid": ("E_C", "delta", "transmissions_j1", "transmissions_j2"),
}


def resolve(raw: Dict[str, Any]) -> RunConfig:
    """Fill defaults and validate constraints, reporting every problem at once."""
    problems: List[str] = []
    vals = {k: d for k, (_, d, _) in SCHEMA.items()}
    unknown = [k for k in raw if k not in SCHEMA]
    problems += [f"unknown key {k!r}" for k in unknown]
    preset = raw.get("model.preset")
    if preset is not None:
        if preset in presets.PRESETS:
            vals.update(_preset_values(preset))
        else:
            problems.append(f"model.preset: unknown preset {preset!r}")
    vals.update({k: v for k, v in raw.items() if k in SCHEMA})

    cmd = vals["task.command"]
    if cmd is None:
        problems.append("task.command: required")
    elif cmd not in COMMANDS:
        problems.append(f"task.command: must be one of {', '.join(COMMANDS)}")
    needs_model = cmd not in (None, "presets", "phase-diagram")

    fam = vals["model.family"]
    if fam is not None and fam not in FAMILIES:
        problems.append(f"model.family: must be one of {', '.join(FAMILIES)}")
        fam = None
    if needs_model and fam is None and preset is None and "model.family" not in raw:
        problems.append("model: name a preset or a family")
    if fam is not None:
        for f in _FAMILY_FIELDS[fam]:
            if vals[f"model.{f}"] is None:
                problems.append(f"model.{f}: required for the {fam} family")
        extra = {f"model.{f}" for fams in _FAMILY_FIELDS.values() for f in fams} - {
            f"model.{f}" for f in _FAMILY_FIELDS[fam]}
        for k in sorted(extra):
            if raw.get(k) is not None:
                problems.append(f"{k}: not a parameter of the {fam} family")
        if fam == "two_mode" and vals["model.flavor"] is None:
            vals["model.flavor"] = "zero_pi"
        if fam != "two_mode" and raw.get("model.flavor") is not None:
            problems.append("model.flavor: only two_mode circuits have a flavor")
        if vals["model.n_gate"] is None:
            vals["model.n_gate"] = 0.0
        if vals["model.phi_ext"] is None:
            vals["model.phi_ext"] = 0.0
    if vals["model.flavor"] is not None and vals["model.flavor"] not in ("zero_pi", "bifluxon"):
        problems.append("model.flavor: must be zero_pi or bifluxon")

    for k in ("model.E_C", "model.E_L", "model.E_C_theta", "model.E_C_phi", "model.delta", "task.tol",
              "task.E_C", "task.ej_start", "task.ej_stop", "task.el_start", "task.el_stop"):
        if vals[k] is not None and not vals[k] > 0:
            problems.append(f"{k}: must be positive, got {vals[k]}")
    if vals["model.E_J"] is not None and not vals["model.E_J"] >= 0:
        problems.append(f"model.E_J: must be non-negative, got {vals['model.E_J']}")
    for k in ("model.transmissions_j1", "model.transmissions_j2"):
        if vals[k] is not None and not all(0.0 <= t <= 1.0 for t in vals[k]):
            problems.append(f"{k}: transmissions must lie in [0, 1]")
    for k in ("model.basis.cutoff",):
        if vals[k] is not None and not vals[k] >= 1:
            problems.append(f"{k}: must be at least 1")
    if vals["model.basis.levels"] is not None and not vals["model.basis.levels"] >= 2:
        problems.append("model.basis.levels: must be at least 2")
    if vals["model.basis.points"] is not None and not vals["model.basis.points"] >= 8:
        problems.append("model.basis.points: must be at least 8")
    for k in ("task.k",):
        if not vals[k] >= 2:
            problems.append(f"{k}: must be at least 2")
    if not vals["task.level"] >= 0:
        problems.append("task.level: must be non-negative")
    if not 1 <= vals["output.precision"] <= 17:
        problems.append("output.precision: must lie in [1, 17]")
    if vals["output.format"] not in ("csv", "json"):
        problems.append("output.format: must be csv or json")
    if vals["output.units"] not in ("ghz", "rad_s"):
        problems.append("output.units: must be ghz or rad_s")
    if vals["task.mode"] not in ("flux", "charge"):
        problems.append("task.mode: must be flux or charge")
    if not vals["task.points_per_axis"] >= 2:
        problems.append("task.points_per_axis: must be at least 2")

    for suffix in ("", "2"):
        p = vals[f"task.param{suffix}"]
        ks = [f"task.start{suffix}", f"task.stop{suffix}", f"task.points{suffix}"]
        if p is None:
            if suffix == "" and cmd == "sweep":
                problems.append("task.param: required for sweep")
            if suffix == "2" and any(vals[k] is not None for k in ks):
                problems.append("task.param2: required when a second grid is given")
            continue
        if p not in PARAMS:
            problems.append(f"task.param{suffix}: must be one of {', '.join(PARAMS)}")
        missing = [k for k in ks if vals[k] is None]
        problems += [f"{k}: required with task.param{suffix}" for k in missing]
        if not missing:
            n = vals[ks[2]]
            if n < 1:
                problems.append(f"{ks[2]}: must be at least 1")
            elif n > 1 and vals[ks[0]] == vals[ks[1]]:
                problems.append(f"task.start{suffix}/task.stop{suffix}: grid is not strictly monotone")
    if vals["task.param2"] is not None and vals["task.param2"] == vals["task.param"]:
        problems.append("task.param2: must differ from task.param")
    for axis in ("ej", "el"):
        a, b, n = vals[f"task.{axis}_start"], vals[f"task.{axis}_stop"], vals[f"task.{axis}_points"]
        if n < 1:
            problems.append(f"task.{axis}_points: must be at least 1")
        elif a is not None and b is not None and (b < a or (n > 1 and b == a)):
            problems.append(f"task.{axis}_start/stop: grid must be strictly increasing")
    if problems:
        raise ConfigError(problems)
    return RunConfig(tuple((k, vals[k]) for k in SCHEMA))


def build_model(cfg: RunConfig) -> mdl.CircuitModel:
    """Circuit model described by the ``model`` section."""
    m = cfg.section("model")
    fam = m["family"]
    kw = {f: m[f] for f in _FAMILY_FIELDS[fam]}
    if fam == "two_mode":
        kw["flavor"] = m["flavor"]
    spec_cls = {v: k for k, v in mdl._FAMILY.items()}[fam]
    try:
        spec = spec_cls(**kw)
        point = ControlPoint(m["n_gate"], m["phi_ext"])
        model = mdl.CircuitModel(spec, point)
        bases = list(model.bases)
        if m["basis.points"] is not None:
            bases = list(mdl.grid_bases(model, m["basis.points"]))
        for i, b in enumerate(bases):
            if isinstance(b, ChargeBasis) and m["basis.cutoff"] is not None:
                bases[i] = ChargeBasis(m["basis.cutoff"])
            if isinstance(b, OscillatorBasis) and m["basis.levels"] is not None:
                bases[i] = OscillatorBasis(m["basis.levels"], b.phi_zpf)
        return model.with_bases(bases)
    except ProtectqError as e:
        raise ConfigError([f"model: {e}"]) from None
