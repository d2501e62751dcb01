"""Hamiltonians and noise-coupling operators of the four circuit families.

Families
--------
* charge mode (``ChargeModeSpec``):  ``4E_C (n - n_g)^2 - E_J cos(theta)``
* flux mode (``FluxModeSpec``):      ``4E_C n^2 - E_J cos(phi) + E_L (phi - 2 pi phi_ext)^2 / 2``
* two-mode 0-pi / bifluxon (``TwoModeSpec``)::

      4E_C^theta (n_theta - n_g)^2 + 4E_C^phi n_phi^2
      + E_L (phi - pi phi_ext)^2 + 2 E_J cos(phi) cos(theta)

* hybrid interferometer (``HybridJunctionSpec``): ``4E_C (n - n_g)^2 + U_1(theta - pi phi_ext)
  + U_2(theta + pi phi_ext)`` with Andreev junction potentials
  ``U(theta) = -Delta sum_i sqrt(1 - T_i sin^2(theta/2))``.

Extended (flux-like) modes are represented in the frame centred on the
inductive minimum, ``phi' = phi - shift`` with ``shift = 2 pi phi_ext``
(flux mode) or ``pi phi_ext`` (two-mode).  The spectrum is unchanged, the
parity of the truncated basis stays exact, and ``phase_offset`` maps
wavefunctions back to the laboratory phase.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import operators as ops
from .errors import (
    BasisMismatchError,
    ChannelNotPresentError,
    InvalidArgumentError,
    InvalidParameterError,
)
from .operators import BasisSpec, ChargeBasis, GridBasis, OscillatorBasis

CHANNELS = ("charge", "flux")


def _positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be positive, got {value}")


def _non_negative(name, value):
    if not (np.isfinite(value) and value >= 0):
        raise InvalidParameterError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class ControlPoint:
    n_gate: float = 0.0
    phi_ext: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.n_gate) and np.isfinite(self.phi_ext)):
            raise InvalidParameterError(f"control point must be finite, got {self}")


@dataclass(frozen=True)
class ChargeModeSpec:
    E_C: float
    E_J: float

    def __post_init__(self):
        _positive("E_C", self.E_C)
        _non_negative("E_J", self.E_J)


@dataclass(frozen=True)
class FluxModeSpec:
    E_C: float
    E_J: float
    E_L: float

    def __post_init__(self):
        _positive("E_C", self.E_C)
        _non_negative("E_J", self.E_J)
        _positive("E_L", self.E_L)


@dataclass(frozen=True)
class TwoModeSpec:
    E_C_theta: float
    E_C_phi: float
    E_J: float
    E_L: float
    flavor: str = "zero_pi"

    def __post_init__(self):
        _positive("E_C_theta", self.E_C_theta)
        _positive("E_C_phi", self.E_C_phi)
        _non_negative("E_J", self.E_J)
        _positive("E_L", self.E_L)
        if self.flavor not in ("zero_pi", "bifluxon"):
            raise InvalidParameterError(f"unknown two-mode flavor {self.flavor!r}")


@dataclass(frozen=True)
class HybridJunctionSpec:
    E_C: float
    delta: float
    transmissions_j1: Tuple[float, ...]
    transmissions_j2: Tuple[float, ...]

    def __post_init__(self):
        _positive("E_C", self.E_C)
        _positive("delta", self.delta)
        object.__setattr__(self, "transmissions_j1", _check_transmissions(self.transmissions_j1))
        object.__setattr__(self, "transmissions_j2", _check_transmissions(self.transmissions_j2))


ModelSpec = Union[ChargeModeSpec, FluxModeSpec, TwoModeSpec, HybridJunctionSpec]


def _check_transmissions(ts) -> Tuple[float, ...]:
    ts = tuple(float(t) for t in np.atleast_1d(ts))
    for t in ts:
        if not (0.0 <= t <= 1.0):
            raise InvalidParameterError(f"channel transmission must lie in [0, 1], got {t}")
    return ts


# ---------------------------------------------------------------------------
# Andreev junction potential and its harmonics
# ---------------------------------------------------------------------------

def junction_potential(delta: float, transmissions: Sequence[float], theta):
    """``-Delta sum_i sqrt(1 - T_i sin^2(theta/2))`` (GHz), vectorized over ``theta``."""
    ts = _check_transmissions(transmissions)
    theta = np.asarray(theta, dtype=float)
    s2 = np.sin(0.5 * theta) ** 2
    total = np.zeros_like(theta)
    for t in ts:
        total = total + np.sqrt(np.clip(1.0 - t * s2, 0.0, None))
    return -delta * total


@dataclass(frozen=True)
class Harmonics:
    """Real Fourier series ``U = sum_k A_k cos(k theta) + B_k sin(k theta)``."""

    cos: np.ndarray
    sin: np.ndarray

    @property
    def k_max(self) -> int:
        return len(self.cos) - 1

    def complex_coefficients(self) -> np.ndarray:
        """``c_k`` for ``k = 0..k_max`` such that ``U = sum_k c_k e^{ik theta}`` (with ``c_{-k} = conj(c_k)``)."""
        c = 0.5 * (self.cos - 1j * self.sin)
        c[0] = self.cos[0]
        return c

    def __call__(self, theta):
        k = np.arange(self.k_max + 1)
        theta = np.asarray(theta, dtype=float)[..., None]
        return np.sum(self.cos * np.cos(k * theta) + self.sin * np.sin(k * theta), axis=-1)


def fourier_harmonics(samples, k_max: int) -> Harmonics:
    """Fourier coefficients of uniform samples of a ``2 pi``-periodic function on ``[0, 2 pi)``.

    Uses the periodic trapezoid rule (an FFT).  Requires at least ``4 k_max``
    samples; sine components are returned alongside the cosine ones so that
    callers can check time-reversal symmetry.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise InvalidArgumentError("samples must be one-dimensional")
    if k_max < 0 or len(samples) < 4 * max(k_max, 1):
        raise InvalidArgumentError(f"{len(samples)} samples cannot resolve k_max={k_max} (need >= 4 k_max)")
    c = np.fft.rfft(samples) / len(samples)
    c = c[: k_max + 1]
    cos = 2.0 * c.real
    sin = -2.0 * c.imag
    cos[0] = c[0].real
    sin[0] = 0.0
    return Harmonics(cos, sin)


_FFT_SAMPLES = 1 << 16


def _channel_coefficients(t: float, k_max: int) -> np.ndarray:
    """Complex (real, even) coefficients of ``sqrt(1 - t sin^2(theta/2))``, k = 0..k_max."""
    k = np.arange(k_max + 1)
    if t == 1.0:
        # |cos(theta/2)| has a kink; use its closed-form series
        return (2.0 / np.pi) * (-1.0) ** (k + 1) / (4.0 * k ** 2 - 1.0)
    if t == 0.0:
        out = np.zeros(k_max + 1)
        out[0] = 1.0
        return out
    m = max(_FFT_SAMPLES, 8 * (k_max + 1))
    theta = 2 * np.pi * np.arange(m) / m
    c = np.fft.rfft(np.sqrt(1.0 - t * np.sin(0.5 * theta) ** 2)).real / m
    return c[: k_max + 1] if len(c) > k_max else np.pad(c, (0, k_max + 1 - len(c)))


def junction_coefficients(delta: float, transmissions: Sequence[float], k_max: int) -> np.ndarray:
    """Complex Fourier coefficients ``c_0..c_kmax`` of a single junction potential."""
    ts = _check_transmissions(transmissions)
    total = np.zeros(k_max + 1)
    for t in ts:
        total = total + _channel_coefficients(t, k_max)
    return -delta * total


def interferometer_coefficients(spec: HybridJunctionSpec, phi_ext: float, k_max: int,
                                derivative: bool = False) -> np.ndarray:
    """Coefficients of ``U_1(theta - pi phi_ext) + U_2(theta + pi phi_ext)``.

    With ``derivative=True`` returns the coefficients of its ``phi_ext`` derivative.
    """
    k = np.arange(k_max + 1)
    c1 = junction_coefficients(spec.delta, spec.transmissions_j1, k_max)
    c2 = junction_coefficients(spec.delta, spec.transmissions_j2, k_max)
    shift = np.pi * phi_ext
    e = np.exp(-1j * k * shift)
    if derivative:
        return -1j * k * np.pi * c1 * e + 1j * k * np.pi * c2 * np.conj(e)
    return c1 * e + c2 * np.conj(e)


def interferometer_potential(spec: HybridJunctionSpec, phi_ext: float, theta):
    shift = np.pi * phi_ext
    return (junction_potential(spec.delta, spec.transmissions_j1, np.asarray(theta) - shift)
            + junction_potential(spec.delta, spec.transmissions_j2, np.asarray(theta) + shift))


def _charge_toeplitz(coeffs: np.ndarray, cutoff: int):
    """Matrix ``<m|U|n> = c_{m-n}`` of a potential with coefficients ``c_k`` (k >= 0)."""
    dim = 2 * cutoff + 1
    col = np.zeros(dim, dtype=complex)
    m = min(dim, len(coeffs))
    col[:m] = coeffs[:m]
    return ops._store(sla.toeplitz(col, np.conj(col)))


# ---------------------------------------------------------------------------
# Single-mode Hamiltonians
# ---------------------------------------------------------------------------

def _charge_kinetic(E_C, n_gate, cutoff):
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    return ops._store(sp.diags((4.0 * E_C * (n - n_gate) ** 2).astype(complex), 0, format="csr"))


def _periodic_grid_check(basis: GridBasis):
    if not basis.periodic or not np.isclose(basis.phi_max - basis.phi_min, 2 * np.pi, rtol=0, atol=1e-12):
        raise BasisMismatchError("compact modes need a periodic grid spanning one 2 pi period")


def h_charge(spec: ChargeModeSpec, point: ControlPoint, basis: BasisSpec):
    """``4E_C (n - n_g)^2 - E_J cos(theta)`` in a charge basis or on a periodic grid."""
    if isinstance(basis, ChargeBasis):
        m = charge_ops_cached(basis.cutoff)
        return _charge_kinetic(spec.E_C, point.n_gate, basis.cutoff) - spec.E_J * m.cos_op
    if isinstance(basis, GridBasis):
        _periodic_grid_check(basis)
        g = ops.grid_ops(basis.points, (basis.phi_min, basis.phi_max), True, spec.E_C, point.n_gate)
        return g.kinetic - spec.E_J * g.cos_op
    raise BasisMismatchError(f"charge mode cannot use {type(basis).__name__}")


def _extended_mode(basis, E_C, E_L_eff):
    """Mode operators plus the inductive ``E_L_eff phi^2 / 2`` term for an extended mode."""
    if isinstance(basis, OscillatorBasis):
        zpf = basis.phi_zpf or ops.oscillator_zpf(E_C, E_L_eff)
        m = oscillator_ops_cached(basis.levels, zpf)
        return m, m.kinetic_full(E_C) + 0.5 * E_L_eff * m.phase_sq
    if isinstance(basis, GridBasis):
        if basis.periodic:
            raise BasisMismatchError("extended modes need an open (non-periodic) grid")
        g = ops.grid_ops(basis.points, (basis.phi_min, basis.phi_max), False, E_C)
        return g, g.kinetic + ops.grid_potential(g, 0.5 * E_L_eff * g.nodes ** 2)
    raise BasisMismatchError(f"extended mode cannot use {type(basis).__name__}")


def _shifted_cos(m, shift):
    """``cos(phi' + shift)`` from the frame operators."""
    c, s = np.cos(shift), np.sin(shift)
    return c * m.cos_op - s * m.sin_op


def h_flux(spec: FluxModeSpec, point: ControlPoint, basis: BasisSpec):
    """Flux-mode Hamiltonian in the frame ``phi' = phi - 2 pi phi_ext``."""
    m, harmonic = _extended_mode(basis, spec.E_C, spec.E_L)
    return harmonic - spec.E_J * _shifted_cos(m, 2 * np.pi * point.phi_ext)


def h_two_mode(spec: TwoModeSpec, point: ControlPoint, bases: Tuple[BasisSpec, BasisSpec]):
    """Two-mode Hamiltonian on ``theta (x) phi`` with frame ``phi' = phi - pi phi_ext``."""
    b_theta, b_phi = bases
    if not isinstance(b_theta, ChargeBasis):
        raise BasisMismatchError("the theta mode of a two-mode circuit needs a charge basis")
    t = charge_ops_cached(b_theta.cutoff)
    # E_L (phi - pi phi_ext)^2 has no 1/2: the inductive curvature is 2 E_L
    m, harmonic = _extended_mode(b_phi, spec.E_C_phi, 2.0 * spec.E_L)
    kin_theta = _charge_kinetic(spec.E_C_theta, point.n_gate, b_theta.cutoff)
    coupling = _shifted_cos(m, np.pi * point.phi_ext)
    return (ops.tensor(kin_theta, m.identity)
            + ops.tensor(t.identity, harmonic)
            + 2.0 * spec.E_J * ops.tensor(t.cos_op, coupling))


def h_hybrid(spec: HybridJunctionSpec, point: ControlPoint, basis: BasisSpec):
    """Capacitively shunted two-junction interferometer with Andreev junctions."""
    if isinstance(basis, ChargeBasis):
        k_max = 2 * basis.cutoff
        coeffs = interferometer_coefficients(spec, point.phi_ext, k_max)
        return _charge_kinetic(spec.E_C, point.n_gate, basis.cutoff) + _charge_toeplitz(coeffs, basis.cutoff)
    if isinstance(basis, GridBasis):
        _periodic_grid_check(basis)
        g = ops.grid_ops(basis.points, (basis.phi_min, basis.phi_max), True, spec.E_C, point.n_gate)
        return g.kinetic + ops.grid_potential(g, interferometer_potential(spec, point.phi_ext, g.nodes))
    raise BasisMismatchError(f"hybrid circuit cannot use {type(basis).__name__}")


# ---------------------------------------------------------------------------
# Cached operator sets (operators are immutable, so sharing is safe)
# ---------------------------------------------------------------------------

_CHARGE_CACHE: dict = {}
_OSC_CACHE: dict = {}


def charge_ops_cached(cutoff: int) -> ops.ModeOperators:
    m = _CHARGE_CACHE.get(cutoff)
    if m is None:
        m = _CHARGE_CACHE.setdefault(cutoff, ops.charge_ops(cutoff))
    return m


@dataclass(frozen=True)
class _OscillatorSet:
    """Fock-basis operators plus Galerkin-exact ``n^2`` and ``phi^2``."""

    base: ops.ModeOperators
    number_sq: np.ndarray
    phase_sq: np.ndarray

    def __getattr__(self, name):
        if name.startswith("__") or name == "base":
            raise AttributeError(name)
        return getattr(self.base, name)

    def kinetic_full(self, E_C):
        return 4.0 * E_C * self.number_sq


def oscillator_ops_cached(levels: int, phi_zpf: float) -> _OscillatorSet:
    key = (levels, float(phi_zpf))
    m = _OSC_CACHE.get(key)
    if m is None:
        if len(_OSC_CACHE) > 64:
            _OSC_CACHE.clear()
        base = ops.oscillator_ops(levels, phi_zpf=phi_zpf)
        big = ops.oscillator_ops(levels + 1, phi_zpf=phi_zpf)
        m = _OscillatorSet(
            base,
            (big.number_op @ big.number_op)[:levels, :levels],
            (big.phase_op @ big.phase_op)[:levels, :levels],
        )
        _OSC_CACHE[key] = m
    return m


# ---------------------------------------------------------------------------
# CircuitModel
# ---------------------------------------------------------------------------

_TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class CircuitModel:
    """A circuit family, its control point and a basis plan (one basis per mode)."""

    spec: ModelSpec
    point: ControlPoint = field(default_factory=ControlPoint)
    bases: Optional[Tuple[BasisSpec, ...]] = None

    def __post_init__(self):
        if self.bases is None:
            object.__setattr__(self, "bases", default_bases(self.spec, self.point))
        bases = tuple(self.bases)
        object.__setattr__(self, "bases", bases)
        if len(bases) != self.n_modes:
            raise BasisMismatchError(f"{self.family} needs {self.n_modes} basis spec(s), got {len(bases)}")

    @property
    def family(self) -> str:
        return _FAMILY[type(self.spec)]

    @property
    def n_modes(self) -> int:
        return 2 if isinstance(self.spec, TwoModeSpec) else 1

    @property
    def dim(self) -> int:
        return int(np.prod([b.dim for b in self.bases]))

    @property
    def channels(self) -> Tuple[str, ...]:
        if isinstance(self.spec, ChargeModeSpec):
            return ("charge",)
        if isinstance(self.spec, FluxModeSpec):
            return ("flux",)
        return ("charge", "flux")

    def has_channel(self, channel: str) -> bool:
        return channel in self.channels

    @property
    def phase_offset(self) -> float:
        """Shift between the laboratory phase and the frame phase of the extended mode."""
        if isinstance(self.spec, FluxModeSpec):
            return _TWO_PI * self.point.phi_ext
        if isinstance(self.spec, TwoModeSpec):
            return np.pi * self.point.phi_ext
        return 0.0

    def hamiltonian(self):
        s, p, b = self.spec, self.point, self.bases
        if isinstance(s, ChargeModeSpec):
            return h_charge(s, p, b[0])
        if isinstance(s, FluxModeSpec):
            return h_flux(s, p, b[0])
        if isinstance(s, TwoModeSpec):
            return h_two_mode(s, p, b)
        return h_hybrid(s, p, b[0])

    def with_point(self, **changes) -> "CircuitModel":
        return dataclasses.replace(self, point=dataclasses.replace(self.point, **changes))

    def with_bases(self, bases) -> "CircuitModel":
        return dataclasses.replace(self, bases=tuple(bases))

    def with_param(self, name: str, value) -> "CircuitModel":
        """Copy with a control-point field or a spec field replaced."""
        if name in ("n_gate", "phi_ext"):
            return self.with_point(**{name: float(value)})
        if name in {f.name for f in dataclasses.fields(self.spec)}:
            return dataclasses.replace(self, spec=dataclasses.replace(self.spec, **{name: value}))
        raise InvalidArgumentError(f"{self.family} has no parameter {name!r}")

    def get_param(self, name: str):
        if name in ("n_gate", "phi_ext"):
            return getattr(self.point, name)
        if name in {f.name for f in dataclasses.fields(self.spec)}:
            return getattr(self.spec, name)
        raise InvalidArgumentError(f"{self.family} has no parameter {name!r}")

    def number_operators(self):
        """``n`` of every mode, embedded in the full space."""
        return [_embed(self, i, _mode_ops(self, i).number_op) for i in range(self.n_modes)]

    def phase_operators(self):
        """Laboratory phase of every extended mode, embedded in the full space."""
        out = []
        for i in range(self.n_modes):
            if _is_extended(self, i):
                m = _mode_ops(self, i)
                lab = m.phase_op + self.phase_offset * m.identity
                out.append(_embed(self, i, lab))
        return out


_FAMILY = {
    ChargeModeSpec: "charge",
    FluxModeSpec: "flux",
    TwoModeSpec: "two_mode",
    HybridJunctionSpec: "hybrid",
}


def _is_extended(model: CircuitModel, i: int) -> bool:
    return isinstance(model.spec, FluxModeSpec) or (isinstance(model.spec, TwoModeSpec) and i == 1)


def _mode_ops(model: CircuitModel, i: int):
    b = model.bases[i]
    s = model.spec
    if isinstance(b, ChargeBasis):
        return charge_ops_cached(b.cutoff)
    if isinstance(b, OscillatorBasis):
        if isinstance(s, FluxModeSpec):
            zpf = b.phi_zpf or ops.oscillator_zpf(s.E_C, s.E_L)
        else:
            zpf = b.phi_zpf or ops.oscillator_zpf(s.E_C_phi, 2.0 * s.E_L)
        return oscillator_ops_cached(b.levels, zpf)
    E_C = s.E_C_phi if isinstance(s, TwoModeSpec) else s.E_C
    n_g = model.point.n_gate if b.periodic else 0.0
    return ops.grid_ops(b.points, (b.phi_min, b.phi_max), b.periodic, E_C, n_g)


def _embed(model: CircuitModel, i: int, op):
    if model.n_modes == 1:
        return op
    others = [ops.identity(b.dim) for b in model.bases]
    return ops.tensor(op, others[1]) if i == 0 else ops.tensor(others[0], op)


def noise_coupling(model: CircuitModel, channel: str):
    """Operator multiplying the bias fluctuation in ``H_int``.

    ``charge``: ``-8 E_C n`` of the gated mode.  ``flux``: ``-E_L phi``
    (laboratory phase), or for the hybrid interferometer the exact
    ``d U_tot / d phi_ext``.
    """
    if channel not in CHANNELS:
        raise InvalidArgumentError(f"unknown channel {channel!r}")
    if not model.has_channel(channel):
        raise ChannelNotPresentError(f"{model.family} circuit has no {channel} channel")
    s = model.spec
    if channel == "charge":
        E_C = s.E_C_theta if isinstance(s, TwoModeSpec) else s.E_C
        return -8.0 * E_C * model.number_operators()[0]
    if isinstance(s, HybridJunctionSpec):
        b = model.bases[0]
        if isinstance(b, ChargeBasis):
            coeffs = interferometer_coefficients(s, model.point.phi_ext, 2 * b.cutoff, derivative=True)
            return _charge_toeplitz(coeffs, b.cutoff)
        g = _mode_ops(model, 0)
        h = 1e-6
        du = (interferometer_potential(s, model.point.phi_ext + h, g.nodes)
              - interferometer_potential(s, model.point.phi_ext - h, g.nodes)) / (2 * h)
        return ops.grid_potential(g, du)
    return -s.E_L * model.phase_operators()[0]


def flux_derivative_operator(model: CircuitModel):
    """``dH/dphi_ext`` (exact), used for Hellmann-Feynman slopes."""
    s = model.spec
    if isinstance(s, HybridJunctionSpec):
        return noise_coupling(model, "flux")
    if isinstance(s, FluxModeSpec):
        m = _mode_ops(model, 0)
        shift = _TWO_PI * model.point.phi_ext
        # d/dphi_ext of -E_J cos(phi' + 2 pi phi_ext)
        return _TWO_PI * s.E_J * (np.sin(shift) * m.cos_op + np.cos(shift) * m.sin_op)
    if isinstance(s, TwoModeSpec):
        t = charge_ops_cached(model.bases[0].cutoff)
        m = _mode_ops(model, 1)
        shift = np.pi * model.point.phi_ext
        dcos = -np.pi * (np.sin(shift) * m.cos_op + np.cos(shift) * m.sin_op)
        return 2.0 * s.E_J * ops.tensor(t.cos_op, dcos)
    raise ChannelNotPresentError(f"{model.family} circuit has no flux channel")


def charge_derivative_operator(model: CircuitModel):
    """``dH/dn_gate`` (exact), used for Hellmann-Feynman slopes."""
    s = model.spec
    if isinstance(s, FluxModeSpec):
        raise ChannelNotPresentError("flux circuit has no charge channel")
    E_C = s.E_C_theta if isinstance(s, TwoModeSpec) else s.E_C
    n = model.number_operators()[0]
    ident = ops.identity(model.dim)
    return -8.0 * E_C * (n - model.point.n_gate * ident)


# ---------------------------------------------------------------------------
# Default basis plans
# ---------------------------------------------------------------------------

def _charge_cutoff(E_J_eff, E_C):
    spread = (max(E_J_eff, 1e-12) / (8.0 * E_C)) ** 0.25
    return int(max(8, np.ceil(6.0 * spread + 6)))


def _oscillator_plan(E_C, E_L_eff, E_J_eff) -> OscillatorBasis:
    """Oscillator basis balancing reach against resolution.

    The natural length ``(2E_C/E_L)^(1/4)`` describes the inductive envelope,
    the well width ``(8E_C/E_J)^(1/4)`` the Josephson wells inside it.  Their
    geometric mean spans the envelope with far fewer levels than the natural
    length when the wells are narrow; the level count then resolves a well
    with a few DVR nodes.  For ``E_J = 0`` this is the exact eigenbasis.
    """
    natural = ops.oscillator_zpf(E_C, E_L_eff)
    if E_J_eff <= 0:
        return OscillatorBasis(30, natural)
    well = min((8.0 * E_C / E_J_eff) ** 0.25, natural)
    zpf = float(np.sqrt(natural * well))
    levels = int(np.clip(np.ceil((2 * np.pi * zpf / well) ** 2), 30, 2000))
    return OscillatorBasis(levels, zpf)


def default_bases(spec: ModelSpec, point: ControlPoint = ControlPoint()) -> Tuple[BasisSpec, ...]:
    """Heuristic starting bases; the convergence loop refines them."""
    if isinstance(spec, ChargeModeSpec):
        return (ChargeBasis(_charge_cutoff(spec.E_J, spec.E_C)),)
    if isinstance(spec, FluxModeSpec):
        return (_oscillator_plan(spec.E_C, spec.E_L, spec.E_J),)
    if isinstance(spec, TwoModeSpec):
        return (ChargeBasis(_charge_cutoff(2 * spec.E_J, spec.E_C_theta)),
                _oscillator_plan(spec.E_C_phi, 2 * spec.E_L, 2 * spec.E_J))
    e_j = spec.delta * (sum(spec.transmissions_j1) + sum(spec.transmissions_j2)) / 4.0
    return (ChargeBasis(_charge_cutoff(e_j, spec.E_C)),)


def grid_bases(model: CircuitModel, points: Optional[int] = None) -> Tuple[BasisSpec, ...]:
    """Real-space counterpart of a model's basis plan (used by the grid oracle)."""
    s = model.spec
    if isinstance(s, (ChargeModeSpec, HybridJunctionSpec)):
        return (GridBasis(points or 1024, -np.pi, np.pi, True),)
    if isinstance(s, FluxModeSpec):
        return (_open_grid(s.E_C, s.E_L, s.E_J, points),)
    return (model.bases[0], _open_grid(s.E_C_phi, 2 * s.E_L, 2 * s.E_J, points))


def _open_grid(E_C, E_L_eff, E_J_eff, points=None, depth=36.0):
    """Open grid centred on the inductive minimum, wide enough that the low
    levels decay by ``e^{-depth}`` before the wall."""
    # classically forbidden beyond E_L x^2/2 - E_J = E_J + 8 sqrt(E_C E_L) (generous ceiling)
    e_top = 2 * E_J_eff + 10 * np.sqrt(8 * E_C * E_L_eff)
    x_t = np.sqrt(2 * e_top / E_L_eff)
    # decay integral of sqrt((E_L x^2/2 - E_J - e_top)/(4 E_C)) beyond x_t, crude linearization
    slope = E_L_eff * x_t
    extra = (1.5 * depth * (4 * E_C) ** 0.5 / slope ** 0.5) ** (2.0 / 3.0)
    half = x_t + extra
    if points is None:
        width = (8.0 * E_C / max(E_J_eff, 1e-12)) ** 0.25 if E_J_eff > 0 else ops.oscillator_zpf(E_C, E_L_eff)
        h = min(width, ops.oscillator_zpf(E_C, E_L_eff)) / 40.0
        points = 2 * int(np.ceil(half / h)) + 1
    return GridBasis(int(points), -half, half, False)
