"""Deterministic CSV / JSON writers.

Floats are rendered with a fixed number of significant digits so that the
same inputs always give the same bytes.  JSON files follow schema 1::

    {"schema": 1,
     "meta": {"version": ..., "config": {...}, ...},
     "axes": [{"name": ..., "values": [...]}, ...],
     "data": [{column: value, ...}, ...]}

Non-finite numbers are written as ``nan`` / ``inf`` in CSV and ``null`` in
JSON.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ProtectqError

SCHEMA_VERSION = 1
GHZ_TO_RAD_S = 2 * math.pi * 1e9


class OutputError(ProtectqError, OSError):
    pass


@dataclass
class Table:
    """Rows of scalars with named columns.

    ``energy_power`` maps a column to the power of the energy unit it
    carries (1 for GHz, 2 for GHz^2), used for unit conversion.
    """

    columns: List[str]
    rows: List[Sequence[Any]]
    axes: List[Tuple[str, Sequence[float]]] = field(default_factory=list)
    energy_power: Dict[str, int] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row length does not match the header")

    def converted(self, units: str) -> "Table":
        """Copy with energy columns in ``units`` (``ghz`` or ``rad_s``)."""
        if units == "ghz" or not self.energy_power:
            return self
        if units != "rad_s":
            raise ValueError(f"unknown units {units!r}")
        idx = {self.columns.index(c): GHZ_TO_RAD_S ** p for c, p in self.energy_power.items() if c in self.columns}
        rows = [[_scale(v, idx.get(i, 1.0)) for i, v in enumerate(r)] for r in self.rows]
        axes = [(n, [_scale(v, GHZ_TO_RAD_S ** self.energy_power.get(n, 0)) for v in vals])
                for n, vals in self.axes]
        return Table(self.columns, rows, axes, {}, dict(self.meta))


def _scale(v, f):
    if f == 1.0 or v is None or isinstance(v, (bool, str, np.bool_)):
        return v
    return v * f


def _plain(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def format_value(v, precision: int = 12) -> str:
    v = _plain(v)
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.{precision}g}"
    return str(v)


def _json_value(v, precision: int):
    v = _plain(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            return None
        return float(f"{v:.{precision}g}")
    if isinstance(v, (list, tuple)):
        return [_json_value(x, precision) for x in v]
    if isinstance(v, dict):
        return {str(k): _json_value(x, precision) for k, x in v.items()}
    return v


def render_csv(table: Table, precision: int = 12) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([format_value(v, precision) for v in r])
    return buf.getvalue()


def render_json(table: Table, precision: int = 12, config: Optional[Dict[str, Any]] = None,
                version: str = "") -> str:
    meta = {"version": version, "config": config or {}}
    meta.update(table.meta)
    doc = {
        "schema": SCHEMA_VERSION,
        "meta": _json_value(meta, precision),
        "axes": [{"name": n, "values": _json_value(list(vals), precision)} for n, vals in table.axes],
        "data": [{c: _json_value(v, precision) for c, v in zip(table.columns, r)} for r in table.rows],
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def render(table: Table, fmt: str = "csv", precision: int = 12, config=None, version: str = "") -> str:
    if fmt == "csv":
        return render_csv(table, precision)
    if fmt == "json":
        return render_json(table, precision, config, version)
    raise ValueError(f"unknown output format {fmt!r}")


def write_text(path, text: str):
    """Write ``text`` to ``path`` (bytes fixed: UTF-8, ``\\n`` line ends)."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise OutputError(f"{path}: {e.strerror or e}") from None


def emit(table: Table, fmt: str = "csv", precision: int = 12, path=None, config=None, version: str = "",
         stream=None) -> str:
    """Render ``table`` and write it to ``path`` (or ``stream`` when no path)."""
    text = render(table, fmt, precision, config, version)
    if path is not None:
        write_text(path, text)
    elif stream is not None:
        stream.write(text)
    return text
