import numpy as np
import pytest
from hypothesis import given, strategies as st

from protectq import models as mdl, presets, spectrum as spc
from protectq.errors import (BasisMismatchError, ChannelNotPresentError, InvalidArgumentError,
                             InvalidParameterError)
from protectq.models import (ChargeModeSpec, CircuitModel, ControlPoint, FluxModeSpec,
                             HybridJunctionSpec, TwoModeSpec)
from protectq.operators import ChargeBasis, GridBasis, OscillatorBasis

from conftest import dense

T_J1 = (1.0, 1.0, 0.60, 0.0, 0.0)
T_J2 = (0.99, 0.78, 0.31, 0.30)


def levels(model, k=6, tol=1e-11):
    return spc.converge(model, k, tol).energies


# -- charge mode -------------------------------------------------------------

def test_free_charge_bands():
    m = CircuitModel(ChargeModeSpec(1.0, 0.0), ControlPoint(0.0), (ChargeBasis(2),))
    e = np.linalg.eigvalsh(dense(m.hamiltonian()))
    assert np.array_equal(e, [0.0, 4.0, 4.0, 16.0, 16.0])


def test_free_charge_degeneracy_point():
    m = CircuitModel(ChargeModeSpec(1.0, 0.0), ControlPoint(0.5), (ChargeBasis(4),))
    e = np.linalg.eigvalsh(dense(m.hamiltonian()))
    assert e[:2] == pytest.approx([1.0, 1.0], abs=1e-14)


def test_transmon_against_grid():
    m = presets.model("transmon")
    basis = spc.converge(m, 5, 1e-12).e01
    grid = spc.grid_energies(m, 5, points=4001)[0]
    assert abs(grid[1] - grid[0] - basis) / basis < 1e-8


def test_charge_rejects_oscillator_basis():
    with pytest.raises(BasisMismatchError):
        CircuitModel(ChargeModeSpec(1.0, 1.0), bases=(OscillatorBasis(10, 1.0),)).hamiltonian()


def test_charge_rejects_open_grid():
    m = CircuitModel(ChargeModeSpec(1.0, 1.0), bases=(GridBasis(64, -3.0, 3.0, False),))
    with pytest.raises(BasisMismatchError):
        m.hamiltonian()


# -- flux mode ---------------------------------------------------------------

def test_flux_harmonic_limit():
    m = CircuitModel(FluxModeSpec(1.0, 0.0, 2.0))
    e = levels(m, 3)
    assert e[1] - e[0] == pytest.approx(4.0, abs=1e-6)


def test_heavy_fluxonium_symmetric_about_half():
    m = presets.model("heavy-fluxonium")
    for d in (0.01, 0.03, 0.07):
        a = spc.converge(m.with_point(phi_ext=0.5 - d), 4, 1e-12).e01
        b = spc.converge(m.with_point(phi_ext=0.5 + d), 4, 1e-12).e01
        assert abs(a - b) < 1e-9


@pytest.mark.parametrize("name", ["blochnium", "heavy-fluxonium"])
def test_flux_period(name):
    m = presets.model(name).with_point(phi_ext=0.37)
    assert levels(m, 5) == pytest.approx(levels(m.with_point(phi_ext=1.37), 5), abs=1e-8)


# -- two-mode ----------------------------------------------------------------

def test_two_mode_separable_limit():
    s = TwoModeSpec(0.4, 1.5, 0.0, 0.3)
    m = CircuitModel(s, ControlPoint(0.2, 0.3))
    e = levels(m, 6, 1e-12)
    n = np.arange(-10, 11)
    charge = np.sort(4 * s.E_C_theta * (n - 0.2) ** 2)
    ladder = np.sqrt(8 * s.E_C_phi * 2 * s.E_L) * (np.arange(10) + 0.5)
    sums = np.sort(np.add.outer(charge, ladder).ravel())[:6]
    assert e == pytest.approx(sums, abs=1e-8)


def test_ideal_zero_pi_quasi_degenerate():
    e = levels(presets.model("zeropi-ideal"), 4, 1e-9)
    assert (e[1] - e[0]) / (e[2] - e[1]) < 1e-2


def test_two_mode_needs_two_bases():
    with pytest.raises(BasisMismatchError):
        CircuitModel(TwoModeSpec(1, 1, 1, 1), bases=(ChargeBasis(5),))


def test_two_mode_flavor_checked():
    with pytest.raises(InvalidParameterError):
        TwoModeSpec(1, 1, 1, 1, flavor="mystery")


# -- Andreev junctions -------------------------------------------------------

def test_open_channel_closes_at_pi():
    assert mdl.junction_potential(45.0, [1.0], np.pi) == pytest.approx(0.0, abs=1e-12)


def test_closed_channel_constant():
    th = np.linspace(0, 2 * np.pi, 17)
    assert mdl.junction_potential(45.0, [0.0], th) == pytest.approx(np.full(17, -45.0))


def test_tunnel_limit():
    t = 1e-4
    th = np.linspace(0, 2 * np.pi, 33)
    u = mdl.junction_potential(45.0, [t], th)
    approx = -45.0 + 45.0 * t / 4 * (1 - np.cos(th))
    assert np.max(np.abs(u - approx)) < 45.0 * t ** 2


@pytest.mark.parametrize("bad", [[-0.1], [1.2], [0.5, np.nan]])
def test_transmission_range(bad):
    with pytest.raises(InvalidParameterError):
        mdl.junction_potential(45.0, bad, 0.0)


def test_harmonics_of_cos2():
    th = 2 * np.pi * np.arange(64) / 64
    h = mdl.fourier_harmonics(np.cos(2 * th), 8)
    want = np.zeros(9)
    want[2] = 1.0
    assert np.max(np.abs(h.cos - want)) < 1e-12
    assert np.max(np.abs(h.sin)) < 1e-12


def test_harmonics_of_open_channel():
    # -|cos(x/2)| = -2/pi - (4/pi) sum_k (-1)^(k+1) cos(k x) / (4k^2 - 1)
    n = 1 << 14
    th = 2 * np.pi * np.arange(n) / n
    h = mdl.fourier_harmonics(mdl.junction_potential(1.0, [1.0], th), 10)
    k = np.arange(1, 11)
    exact = -(4 / np.pi) * (-1.0) ** (k + 1) / (4 * k ** 2 - 1)
    assert h.cos[0] == pytest.approx(-2 / np.pi, abs=1e-8)
    assert h.cos[1:] == pytest.approx(exact, abs=1e-7)
    # the first harmonic dominates; for -|cos| it is negative, A_1 = -4/(3 pi)
    assert h.cos[1] == pytest.approx(-4 / (3 * np.pi), abs=1e-8)
    assert np.argmax(np.abs(h.cos[1:])) == 0


def test_harmonics_undersampled():
    with pytest.raises(InvalidArgumentError):
        mdl.fourier_harmonics(np.zeros(15), 4)


def test_identical_junctions_cancel_odd_harmonics():
    s = HybridJunctionSpec(0.284, 45.0, T_J1, T_J1)
    n = 1 << 12
    th = 2 * np.pi * np.arange(n) / n
    h = mdl.fourier_harmonics(mdl.interferometer_potential(s, 0.5, th), 40)
    assert np.max(np.abs(h.cos[1::2])) < 1e-10 * s.delta
    assert np.max(np.abs(h.sin)) < 1e-10 * s.delta


def test_identical_junctions_add_at_zero_flux():
    s = HybridJunctionSpec(0.284, 45.0, T_J1, T_J1)
    th = np.linspace(-np.pi, np.pi, 101)
    assert mdl.interferometer_potential(s, 0.0, th) == pytest.approx(
        2 * mdl.junction_potential(45.0, T_J1, th), abs=1e-12)
    h = mdl.fourier_harmonics(mdl.interferometer_potential(s, 0.0, 2 * np.pi * np.arange(512) / 512), 8)
    assert np.argmax(np.abs(h.cos[1:])) == 0


def _rebuild_error(ts, phi, k_max):
    s = HybridJunctionSpec(0.284, 45.0, ts, ts)
    th = np.linspace(-np.pi, np.pi, 257)
    c = mdl.interferometer_coefficients(s, phi, k_max)
    k = np.arange(1, k_max + 1)
    rebuilt = np.real(c[0] + 2 * np.sum(c[1:] * np.exp(1j * np.outer(th, k)), axis=1))
    return np.max(np.abs(rebuilt - mdl.interferometer_potential(s, phi, th))) / s.delta


@pytest.mark.parametrize("ts", [(0.6, 0.0, 0.0), (0.78, 0.31, 0.30), (0.5,)])
@pytest.mark.parametrize("phi", [0.0, 0.21, 0.5])
def test_fourier_completeness_moderate_channels(ts, phi):
    assert _rebuild_error(ts, phi, 20) < 1e-8


@pytest.mark.parametrize("phi", [0.0, 0.21, 0.5])
def test_fourier_completeness_fig8_j2(phi):
    # T = 0.99 decays like ((1 - 0.1) / (1 + 0.1))^k, so 20 harmonics are not enough
    assert _rebuild_error(T_J2, phi, 120) < 1e-8


@pytest.mark.xfail(strict=True, reason="T=1 channels have a kink (1/k^2 harmonics) and T=0.99 "
                                       "needs ~60 harmonics; 20 cannot reach 1e-8 Delta")
@pytest.mark.parametrize("ts", [T_J1, T_J2])
def test_fourier_completeness_fig8_kmax20(ts):
    assert _rebuild_error(ts, 0.21, 20) < 1e-8


def test_open_channel_harmonics_decay_algebraically():
    s = HybridJunctionSpec(0.284, 45.0, (1.0,), (1.0,))
    c = np.abs(mdl.interferometer_coefficients(s, 0.0, 40))
    # 1/k^2 envelope on the nonzero (even-index after doubling) terms
    assert c[20] * 20 ** 2 == pytest.approx(c[40] * 40 ** 2, rel=0.05)


def test_hybrid_parity_at_half_flux():
    sol = spc.converge(presets.model("hybrid-cos2theta"), 4, 1e-10)
    e0, o0 = spc.charge_parity_weights(sol, 0)
    e1, o1 = spc.charge_parity_weights(sol, 1)
    assert max(e0, o0) / min(e0, o0) > 10
    assert max(e1, o1) / min(e1, o1) > 10
    assert (e0 > o0) != (e1 > o1)


def _reduction_error(t, ng, phi):
    s = HybridJunctionSpec(0.284, 45.0, (t, t), (t, t))
    hyb = spc.converge(CircuitModel(s, ControlPoint(ng, phi)), 3, 1e-13).e01
    E_J = 45.0 * 2 * t / 4 * 2 * np.cos(np.pi * phi)
    cpb = spc.converge(CircuitModel(ChargeModeSpec(0.284, E_J), ControlPoint(ng)), 3, 1e-13).e01
    return abs(hyb - cpb) / cpb


@pytest.mark.parametrize("phi", [0.0, 0.2, 0.35])
def test_hybrid_reduces_to_cooper_pair_box(phi):
    # at the charge degeneracy E01 ~ E_J, so the O(t) correction to E_J shows directly
    errs = [_reduction_error(t, 0.5, phi) for t in (1e-2, 1e-3)]
    assert errs[1] < 5e-4
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.3)
    # away from it the error falls at least as fast
    off = [_reduction_error(t, 0.1, phi) for t in (1e-1, 1e-2, 1e-3)]
    assert off[0] > off[1] > off[2] and off[1] / off[2] > 10


# -- noise couplings ---------------------------------------------------------

def test_charge_coupling_formula():
    m = CircuitModel(ChargeModeSpec(0.3, 5.0), bases=(ChargeBasis(6),))
    assert np.array_equal(dense(mdl.noise_coupling(m, "charge")), -8 * 0.3 * np.diag(np.arange(-6, 7)))


def test_charge_mode_has_no_flux_channel():
    with pytest.raises(ChannelNotPresentError):
        mdl.noise_coupling(presets.model("transmon"), "flux")
    with pytest.raises(ChannelNotPresentError):
        mdl.noise_coupling(presets.model("blochnium"), "charge")


def test_flux_coupling_oscillator():
    m = CircuitModel(FluxModeSpec(1.0, 0.0, 2.0))
    sol = spc.eigensolve(m, 3)
    op = mdl.noise_coupling(m, "flux")
    zpf = (2 * 1.0 / 2.0) ** 0.25
    assert abs(spc.matrix_element(sol, op, 0, 1)) == pytest.approx(2.0 * zpf, abs=1e-10)


def test_hybrid_flux_coupling_is_potential_derivative():
    m = presets.model("hybrid-cos2theta").with_point(phi_ext=0.3)
    op = mdl.noise_coupling(m, "flux")
    h = 1e-5
    fd = (m.with_point(phi_ext=0.3 + h).hamiltonian() - m.with_point(phi_ext=0.3 - h).hamiltonian()) / (2 * h)
    assert np.max(np.abs(dense(op) - dense(fd))) < 1e-6


# -- symmetries --------------------------------------------------------------

PERIODIC_CASES = [
    ("transmon", "n_gate"), ("hybrid-cos2theta", "n_gate"), ("hybrid-cos2theta", "phi_ext"),
    ("blochnium", "phi_ext"), ("bifluxon-realized", "n_gate"), ("bifluxon-realized", "phi_ext"),
]


@pytest.mark.parametrize("name,param", PERIODIC_CASES)
def test_spectrum_periodicity(name, param):
    m = presets.model(name).with_param(param, 0.13)
    shifted = m.with_param(param, 1.13)
    assert levels(m, 5, 1e-10) == pytest.approx(levels(shifted, 5, 1e-10), abs=1e-8)


@given(st.floats(0.05, 20), st.floats(0.0, 40), st.floats(-1, 1))
def test_charge_mirror(E_C, E_J, ng):
    m = CircuitModel(ChargeModeSpec(E_C, E_J), ControlPoint(ng))
    a = np.linalg.eigvalsh(dense(m.hamiltonian()))
    b = np.linalg.eigvalsh(dense(m.with_point(n_gate=-ng).hamiltonian()))
    assert np.max(np.abs(a - b)) <= 1e-11 * max(1.0, np.max(np.abs(a)))


@given(st.floats(0.2, 5), st.floats(0.0, 10), st.floats(0.1, 2), st.floats(-1, 1))
def test_flux_mirror(E_C, E_J, E_L, phi):
    m = CircuitModel(FluxModeSpec(E_C, E_J, E_L), ControlPoint(0.0, phi))
    a = spc.converge(m, 4, 1e-10).energies
    b = spc.converge(m.with_point(phi_ext=-phi), 4, 1e-10).energies
    assert a == pytest.approx(b, abs=1e-8)


@given(st.sampled_from(presets.names()), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_hamiltonians_hermitian(name, ng, phi):
    m = presets.model(name).with_point(n_gate=ng, phi_ext=phi)
    from protectq.operators import is_hermitian
    assert is_hermitian(m.hamiltonian())
