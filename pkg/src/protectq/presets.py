"""Named circuit presets with their operating points.

Energies in GHz (E/h).  The operating point is where protection grades and
coherence summaries are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Tuple

from .errors import InvalidArgumentError
from .models import (
    ChargeModeSpec,
    CircuitModel,
    ControlPoint,
    FluxModeSpec,
    HybridJunctionSpec,
    ModelSpec,
    TwoModeSpec,
)


@dataclass(frozen=True)
class Preset:
    name: str
    figure: str
    spec: ModelSpec
    point: ControlPoint
    note: str = ""

    @property
    def model(self) -> CircuitModel:
        return CircuitModel(self.spec, self.point)


_TABLE: Tuple[Preset, ...] = (
    Preset("transmon", "4a", ChargeModeSpec(E_C=0.2, E_J=20.0), ControlPoint(0.0, 0.0),
           "heavy charge mode"),
    Preset("blochnium", "4b", FluxModeSpec(E_C=7.07, E_J=4.7, E_L=0.067), ControlPoint(0.0, 0.5),
           "light flux mode"),
    Preset("heavy-fluxonium", "4c", FluxModeSpec(E_C=0.46, E_J=8.11, E_L=0.24), ControlPoint(0.0, 0.45),
           "heavy flux mode, biased away from the sweet spot"),
    Preset("bifluxon-ideal", "6b", TwoModeSpec(10.0, 10.0, 10.0, 0.05, "bifluxon"), ControlPoint(0.5, 0.0),
           "hard-regime bifluxon"),
    Preset("bifluxon-realized", "6c", TwoModeSpec(7.7, 2.5, 27.2, 1.88, "bifluxon"), ControlPoint(0.5, 0.0),
           "fabricated bifluxon"),
    Preset("zeropi-ideal", "7b", TwoModeSpec(0.03, 20.0, 10.0, 0.05, "zero_pi"), ControlPoint(0.0, 0.0),
           "deep 0-pi regime"),
    Preset("zeropi-realized", "7c", TwoModeSpec(0.092, 1.14, 6.0, 0.38, "zero_pi"), ControlPoint(0.0, 0.0),
           "fabricated 0-pi qubit"),
    Preset("hybrid-cos2theta", "8",
           HybridJunctionSpec(E_C=0.284, delta=45.0, transmissions_j1=(1.0, 1.0, 0.60, 0.0, 0.0),
                              transmissions_j2=(0.99, 0.78, 0.31, 0.30)),
           ControlPoint(0.0, 0.5), "semiconductor interferometer at half flux"),
)

PRESETS: Dict[str, Preset] = {p.name: p for p in _TABLE}


def names() -> Tuple[str, ...]:
    return tuple(PRESETS)


def get(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def model(name: str) -> CircuitModel:
    """Model of a preset at its operating point with the default basis plan."""
    return get(name).model
