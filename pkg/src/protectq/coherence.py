"""Noise susceptibilities, decoherence rates, protection grades and phase diagrams.

Rates follow the usual golden-rule / quasi-static forms

    gamma_phi = c |dE01/dlambda|^2 S_lambda(omega_ir)
    gamma_1   = c |<0|O|1>|^2     S_lambda(E01 / h)

In relative mode ``c = 1`` and energies stay in GHz, which is enough to
rank circuits against each other.  Absolute mode converts the energy
derivatives to angular frequency (``2 pi 1e9`` rad/s per GHz) and multiplies
by a constant the user has to supply, because the noise prefactors are a
property of the device rather than of the circuit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from . import models as mdl
from . import spectrum as spc
from .errors import (
    ChannelNotPresentError,
    IncompleteInputError,
    InterpolationRangeError,
    InvalidArgumentError,
    InvalidParameterError,
    NumericalFailureError,
)
from .models import CHANNELS, ChargeModeSpec, CircuitModel, ControlPoint, FluxModeSpec

GHZ_TO_RAD_S = 2 * np.pi * 1e9
BIAS_OF = {"charge": "n_gate", "flux": "phi_ext"}
NOISE_KINDS = ("one_over_f", "white", "table")


# ---------------------------------------------------------------------------
# Noise spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    """Power spectral density of one bias parameter.

    Parameters
    ----------
    channel : {"charge", "flux"}
    kind : {"one_over_f", "white", "table"}
    amplitude : float
        1/f amplitude ``A`` in bias units per sqrt(Hz) at 1 Hz, so that
        ``S(f) = A^2 / f``.
    s0 : float
        White-noise level (bias units squared per Hz).
    table : (freqs, values)
        Sampled spectrum, frequencies in Hz, strictly ascending and positive.
        Linear interpolation in between, no extrapolation.
    ir_cutoff : float
        Frequency (Hz) standing in for ``omega -> 0`` in the dephasing rate.
    """

    channel: str
    kind: str
    amplitude: float = 0.0
    s0: float = 0.0
    table: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None
    ir_cutoff: float = 1.0

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise InvalidArgumentError(f"unknown channel {self.channel!r}")
        if self.kind not in NOISE_KINDS:
            raise InvalidArgumentError(f"unknown noise kind {self.kind!r}")
        for name in ("amplitude", "s0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise InvalidParameterError(f"{name} must be non-negative, got {v}")
        if not (np.isfinite(self.ir_cutoff) and self.ir_cutoff > 0):
            raise InvalidParameterError(f"ir_cutoff must be positive, got {self.ir_cutoff}")
        if self.kind == "table":
            if self.table is None:
                raise InvalidParameterError("table noise needs (frequencies, values)")
            f, s = (tuple(float(x) for x in np.atleast_1d(a)) for a in self.table)
            fa, sa = np.array(f), np.array(s)
            if len(f) < 2 or len(f) != len(s):
                raise InvalidParameterError("noise table needs at least two (frequency, value) pairs")
            if not (np.all(np.isfinite(fa)) and np.all(fa > 0) and np.all(np.diff(fa) > 0)):
                raise InvalidParameterError("noise table frequencies must be positive and strictly ascending")
            if not (np.all(np.isfinite(sa)) and np.all(sa >= 0)):
                raise InvalidParameterError("noise table values must be non-negative")
            object.__setattr__(self, "table", (f, s))

    def psd(self, freq: float) -> float:
        """``S(freq)`` with ``freq`` in Hz."""
        if not freq > 0:
            raise InvalidArgumentError(f"noise frequency must be positive, got {freq}")
        if self.kind == "one_over_f":
            return self.amplitude ** 2 / freq
        if self.kind == "white":
            return self.s0
        f, s = self.table
        if not (f[0] <= freq <= f[-1]):
            raise InterpolationRangeError(f"frequency {freq:.6g} Hz outside the noise table [{f[0]:.6g}, {f[-1]:.6g}]")
        return float(np.interp(freq, f, s))

    def scaled(self, factor: float) -> "NoiseSpec":
        """Same spectrum with ``S`` multiplied by ``factor``."""
        if self.kind == "one_over_f":
            return NoiseSpec(self.channel, self.kind, amplitude=self.amplitude * math.sqrt(factor),
                             ir_cutoff=self.ir_cutoff)
        if self.kind == "white":
            return NoiseSpec(self.channel, self.kind, s0=self.s0 * factor, ir_cutoff=self.ir_cutoff)
        f, s = self.table
        return NoiseSpec(self.channel, self.kind, table=(f, tuple(x * factor for x in s)), ir_cutoff=self.ir_cutoff)


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateEstimate:
    gamma_phi: float
    gamma_1: float
    t2: float
    mode: str = "relative"


def combine_t2(gamma_1: float, gamma_phi: float) -> float:
    """``T2 = 1 / (gamma_1 / 2 + gamma_phi)``; ``inf`` when both rates vanish."""
    for name, g in (("gamma_1", gamma_1), ("gamma_phi", gamma_phi)):
        if not (g >= 0):
            raise InvalidArgumentError(f"{name} must be non-negative, got {g}")
    total = 0.5 * gamma_1 + gamma_phi
    return math.inf if total == 0 else 1.0 / total


def _prefactor(mode: str, constant: Optional[float]) -> float:
    if mode == "relative":
        return 1.0
    if mode == "absolute":
        if constant is None or not (np.isfinite(constant) and constant > 0):
            raise InvalidArgumentError("absolute rates need a positive proportionality constant")
        return constant * GHZ_TO_RAD_S ** 2
    raise InvalidArgumentError(f"unknown rate mode {mode!r}")


def _check_channel(model: CircuitModel, channel: str, noise: NoiseSpec):
    if noise.channel != channel:
        raise InvalidArgumentError(f"noise is for the {noise.channel} channel, not {channel}")
    if not model.has_channel(channel):
        raise ChannelNotPresentError(f"{model.family} circuit has no {channel} channel")


def dephasing_rate(model: CircuitModel, channel: str, noise: NoiseSpec, mode: str = "relative",
                   constant: Optional[float] = None, tol: float = 1e-10,
                   slope: Optional[float] = None) -> RateEstimate:
    """Quasi-static dephasing from the slope of ``E01`` at the model's control point.

    ``slope`` (GHz per bias unit) may be passed to skip the derivative.
    """
    _check_channel(model, channel, noise)
    pref = _prefactor(mode, constant)
    if slope is None:
        slope = spc.dispersion_slope(model, BIAS_OF[channel], tol=tol).value
    g = pref * slope ** 2 * noise.psd(noise.ir_cutoff)
    return RateEstimate(float(g), 0.0, combine_t2(0.0, g), mode)


def relaxation_rate(model: CircuitModel, channel: str, noise: NoiseSpec, mode: str = "relative",
                    constant: Optional[float] = None, tol: float = 1e-10,
                    solution: Optional[spc.EigenSolution] = None) -> RateEstimate:
    """Golden-rule ``0 <-> 1`` rate through ``noise_coupling(model, channel)``."""
    _check_channel(model, channel, noise)
    pref = _prefactor(mode, constant)
    if solution is None:
        solution = spc.converge(model, 4, tol)
    op = mdl.noise_coupling(solution.model, channel)
    elem = abs(spc.matrix_element(solution, op, 0, 1))
    g = pref * elem ** 2 * noise.psd(solution.e01 * 1e9)
    return RateEstimate(0.0, float(g), combine_t2(g, 0.0), mode)


def sweet_spot_curvature(model: CircuitModel, channel: str, step: float = 1e-3, tol: float = 1e-10) -> float:
    """``d^2 E01 / dlambda^2`` at the control point (GHz per unit squared)."""
    if not model.has_channel(channel):
        raise ChannelNotPresentError(f"{model.family} circuit has no {channel} channel")
    if not step > 0:
        raise InvalidArgumentError(f"step must be positive, got {step}")
    bias = BIAS_OF[channel]
    sol = spc.converge(model, 4, tol)
    lam = sol.model.get_param(bias)

    def e01(x):
        e = spc.eigensolve(sol.model.with_param(bias, x), 4, hint=sol.energies).energies
        return e[1] - e[0]

    return float((e01(lam + step) - 2 * sol.e01 + e01(lam - step)) / step ** 2)


def residual_dephasing(model: CircuitModel, channel: str, amplitude: float, tol: float = 1e-10) -> float:
    """Relative second-order dephasing ``(c2 dlambda^2)^2`` with ``c2 = E01''/2``.

    At a sweet spot the linear term vanishes and the quadratic shift
    ``c2 dlambda^2`` of the transition sets the residual sensitivity.
    """
    if not amplitude >= 0:
        raise InvalidParameterError(f"noise amplitude must be non-negative, got {amplitude}")
    c2 = 0.5 * sweet_spot_curvature(model, channel, tol=tol)
    return float((c2 * amplitude ** 2) ** 2)


def total_rate(model: CircuitModel, noises: Sequence[NoiseSpec], mode: str = "relative",
               constant: Optional[float] = None, tol: float = 1e-10) -> RateEstimate:
    """Sum the dephasing and relaxation rates of several channels."""
    sol = spc.converge(model, 4, tol)
    gp = g1 = 0.0
    for noise in noises:
        gp += dephasing_rate(sol.model, noise.channel, noise, mode, constant, tol).gamma_phi
        g1 += relaxation_rate(sol.model, noise.channel, noise, mode, constant, tol, solution=sol).gamma_1
    return RateEstimate(gp, g1, combine_t2(g1, gp), mode)


# ---------------------------------------------------------------------------
# Protection grades
# ---------------------------------------------------------------------------

GRADES = ("absent", "linear", "exponential", "not_applicable")


@dataclass(frozen=True)
class Thresholds:
    exponent: float = math.log(1e3)
    slope: float = 1e-6

    def __post_init__(self):
        if not (np.isfinite(self.exponent) and np.isfinite(self.slope) and self.slope >= 0):
            raise InvalidParameterError(f"invalid thresholds {self}")


@dataclass(frozen=True)
class ProtectionGrade:
    """Grades per (channel, error type) plus the thresholds that produced them.

    ``t1`` is the relaxation grade, ``charge`` and ``flux`` the dephasing
    grades.
    """

    t1: str
    charge: str
    flux: str
    thresholds: Thresholds = field(default_factory=Thresholds)

    def as_dict(self) -> Dict[str, str]:
        return {"T1": self.t1, "charge_dephasing": self.charge, "flux_dephasing": self.flux}


def _need(metrics, key, name):
    try:
        v = float(metrics[key])
    except (KeyError, TypeError, ValueError):
        raise IncompleteInputError(f"missing metric {name}.{key}") from None
    if np.isnan(v):
        raise IncompleteInputError(f"metric {name}.{key} is NaN")
    return v


def _dephasing_grade(m, name, th: Thresholds) -> str:
    if m is None:
        return "not_applicable"
    eta = _need(m, "eta", name)
    slope = abs(_need(m, "slope", name))
    if eta > th.exponent:
        return "exponential"
    return "linear" if slope < th.slope else "absent"


def classify_protection(metrics: Mapping[str, Optional[Mapping[str, float]]],
                        thresholds: Thresholds = Thresholds()) -> ProtectionGrade:
    """Table-style protection grades from numeric metrics.

    Parameters
    ----------
    metrics : mapping
        ``metrics["charge"]`` and ``metrics["flux"]``: ``{"slope", "eta"}`` at
        the operating point, or ``None`` / missing when the circuit lacks that
        channel.  ``metrics["relaxation"]``: ``{"zeta"}``.
    thresholds : Thresholds

    Notes
    -----
    Dephasing is exponential when ``eta`` exceeds ``thresholds.exponent``,
    linear when only the slope vanishes, absent otherwise.  Relaxation has no
    sweet-spot analogue, so it is exponential or absent.
    """
    rel = metrics.get("relaxation")
    if rel is None:
        raise IncompleteInputError("missing metric relaxation.zeta")
    zeta = _need(rel, "zeta", "relaxation")
    t1 = "exponential" if zeta > thresholds.exponent else "absent"
    return ProtectionGrade(t1, _dephasing_grade(metrics.get("charge"), "charge", thresholds),
                           _dephasing_grade(metrics.get("flux"), "flux", thresholds), thresholds)


def relaxation_exponent(solution: spc.EigenSolution) -> float:
    """``zeta = -ln max_i |<0|n_i|1>|`` over the charge operators of all modes.

    The island charges are the local operators every circuit exposes to its
    dielectric environment, so this is the relaxation metric shared by all
    families.  A quasi-degenerate doublet uses the rotation-invariant block
    radius instead of the raw element.
    """
    worst = 0.0
    for n in solution.model.number_operators():
        te = spc.transition_element(solution, n)
        worst = max(worst, te.block_radius if te.block_radius is not None else te.magnitude)
    return math.inf if worst == 0 else -math.log(worst)


@dataclass
class ProtectionReport:
    metrics: Dict[str, Optional[Dict[str, float]]]
    grade: ProtectionGrade
    converged: bool


def protection_metrics(model: CircuitModel, tol: float = 1e-9, points: int = 21,
                       workers: Optional[int] = None) -> Tuple[Dict[str, Optional[Dict[str, float]]], bool]:
    """Slopes, dispersion exponents and the relaxation exponent at ``model.point``."""
    sol = spc.converge(model, 4, tol)
    ok = sol.converged
    out: Dict[str, Optional[Dict[str, float]]] = {}
    for ch in CHANNELS:
        if not model.has_channel(ch):
            out[ch] = None
            continue
        bias = BIAS_OF[ch]
        slope = spc.dispersion_slope(sol.model, bias, converge_basis=False)
        disp = spc.dispersion_amplitude(sol.model, bias, points=points, tol=tol, workers=workers)
        ok &= bool(np.all(disp.scan.converged))
        out[ch] = {"slope": abs(slope.value), "eta": disp.eta, "amplitude": disp.amplitude}
    out["relaxation"] = {"zeta": relaxation_exponent(sol), "e01": sol.e01}
    return out, ok


def protection_report(model: CircuitModel, thresholds: Thresholds = Thresholds(), tol: float = 1e-9,
                      points: int = 21, workers: Optional[int] = None) -> ProtectionReport:
    metrics, ok = protection_metrics(model, tol, points, workers)
    return ProtectionReport(metrics, classify_protection(metrics, thresholds), ok)


# ---------------------------------------------------------------------------
# Single-mode phase diagrams
# ---------------------------------------------------------------------------

# Largest ratios the default basis plans converge within the dense limit.
EJ_EC_CAP = 300.0
EL_EC_RANGE = (1e-4, 10.0)

FLUX_SLOPE_POINT = 0.25
FLUX_ELEMENT_POINT = 0.45
CHARGE_SLOPE_POINT = 0.25


@dataclass
class PhaseDiagram:
    """Per-cell metrics on an ``(el_ec, ej_ec)`` grid (rows follow ``el_ec``).

    ``element`` is ``|<0|n|1>|``, ``coupling`` the same element of the full
    charge coupling ``8 E_C n``.  Charge-mode diagrams have a single row and
    ``el_ec`` is empty.
    """

    kind: str
    ej_ec: np.ndarray
    el_ec: np.ndarray
    E_C: float
    slope: np.ndarray
    element: np.ndarray
    coupling: np.ndarray
    converged: np.ndarray

    def cells(self):
        """Flattened ``(ej_ec, el_ec, slope, element, coupling, converged)`` rows, row-major."""
        el = self.el_ec if self.kind == "flux" else np.array([np.nan])
        for r, y in enumerate(el):
            for c, x in enumerate(self.ej_ec):
                yield (x, y, self.slope[r, c], self.element[r, c], self.coupling[r, c], bool(self.converged[r, c]))


def _monotone(grid, name) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0 or not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise InvalidArgumentError(f"{name} grid must be non-empty, finite and positive")
    if g.size > 1 and not np.all(np.diff(g) > 0):
        raise InvalidArgumentError(f"{name} grid must be strictly increasing")
    return g


def _flux_cell(args):
    E_C, ej, el, tol = args
    with threadpool_limits(limits=1):
        try:
            spec = FluxModeSpec(E_C, ej * E_C, el * E_C)
            m = CircuitModel(spec, ControlPoint(phi_ext=FLUX_SLOPE_POINT))
            s = converge_cell(m, tol)
            slope = spc.dispersion_slope(s.model, "phi_ext", converge_basis=False).value
            t = converge_cell(m.with_point(phi_ext=FLUX_ELEMENT_POINT), tol)
            n = t.model.number_operators()[0]
            elem = abs(spc.matrix_element(t, n, 0, 1))
            return abs(slope), elem, 8 * E_C * elem, s.converged and t.converged
        except NumericalFailureError:
            return np.nan, np.nan, np.nan, False


def _charge_cell(args):
    E_C, ej, tol = args
    with threadpool_limits(limits=1):
        try:
            m = CircuitModel(ChargeModeSpec(E_C, ej * E_C), ControlPoint(n_gate=CHARGE_SLOPE_POINT))
            s = converge_cell(m, tol)
            slope = spc.dispersion_slope(s.model, "n_gate", converge_basis=False).value
            elem = abs(spc.matrix_element(s, s.model.number_operators()[0], 0, 1))
            return abs(slope), elem, 8 * E_C * elem, s.converged
        except NumericalFailureError:
            return np.nan, np.nan, np.nan, False


def converge_cell(model: CircuitModel, tol: float) -> spc.EigenSolution:
    """Converge within the dense limit; cells that need more are reported unconverged."""
    try:
        return spc.converge(model, 4, tol, max_dim=spc.DENSE_LIMIT)
    except InvalidArgumentError:
        sol = spc.eigensolve(model, 4)
        sol.converged = False
        return sol


def default_phase_grid(points: int = 20) -> Tuple[np.ndarray, np.ndarray]:
    """Log-spaced ``E_J/E_C`` in [0.1, 100] and ``E_L/E_C`` in [1e-3, 1]."""
    return np.logspace(-1, 2, points), np.logspace(-3, 0, points)


def phase_diagram(mode_kind: str, ej_ec, el_ec=None, E_C: float = 1.0, tol: float = 1e-8,
                  workers: Optional[int] = None) -> PhaseDiagram:
    """Slope and transition-element landscape of a single charge or flux mode.

    Flux mode: ``|dE01/dphi_ext|`` at ``phi_ext = 0.25`` and ``|<0|n|1>|`` at
    ``phi_ext = 0.45`` on every ``(E_L/E_C, E_J/E_C)`` cell.  Charge mode:
    ``|dE01/dn_gate|`` (and ``|<0|n|1>|``) at ``n_gate = 0.25`` along
    ``E_J/E_C``.  Cells are independent and farmed out to the worker pool;
    failures and unconverged cells come back flagged instead of raising.
    """
    if mode_kind not in ("flux", "charge"):
        raise InvalidArgumentError(f"mode_kind must be 'flux' or 'charge', got {mode_kind!r}")
    if not (np.isfinite(E_C) and E_C > 0):
        raise InvalidParameterError(f"E_C must be positive, got {E_C}")
    x = _monotone(ej_ec, "E_J/E_C")
    if x[-1] > EJ_EC_CAP:
        raise InvalidArgumentError(f"E_J/E_C above the supported cap {EJ_EC_CAP}")
    if mode_kind == "flux":
        if el_ec is None:
            raise InvalidArgumentError("flux-mode phase diagram needs an E_L/E_C grid")
        y = _monotone(el_ec, "E_L/E_C")
        if y[0] < EL_EC_RANGE[0] or y[-1] > EL_EC_RANGE[1]:
            raise InvalidArgumentError(f"E_L/E_C outside the supported range {EL_EC_RANGE}")
        jobs = [(E_C, a, b, tol) for b in y for a in x]
        res = spc.parallel_map(_flux_cell, jobs, workers)
        shape = (len(y), len(x))
    else:
        y = np.array([])
        jobs = [(E_C, a, tol) for a in x]
        res = spc.parallel_map(_charge_cell, jobs, workers)
        shape = (1, len(x))
    arr = np.array([r[:3] for r in res], dtype=float).reshape(shape + (3,))
    conv = np.array([r[3] for r in res], dtype=bool).reshape(shape)
    return PhaseDiagram(mode_kind, x, y, float(E_C), arr[..., 0], arr[..., 1], arr[..., 2], conv)


def cell_metrics(mode_kind: str, ej_ec: float, el_ec: Optional[float] = None, E_C: float = 1.0,
                 tol: float = 1e-8) -> Tuple[float, float, float, bool]:
    """Metrics of one off-grid cell, e.g. a device marker."""
    if mode_kind == "flux":
        return _flux_cell((E_C, ej_ec, el_ec, tol))
    return _charge_cell((E_C, ej_ec, tol))
