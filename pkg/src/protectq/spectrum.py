"""Diagonalization, basis convergence, sweeps and susceptibility quantities."""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar
from threadpoolctl import threadpool_limits

from . import models as mdl
from .errors import ChannelNotPresentError, InvalidArgumentError, NumericalFailureError
from .models import CircuitModel
from .operators import ChargeBasis, GridBasis, OscillatorBasis

ControlPointLike = Union[mdl.ControlPoint, dict]

DENSE_LIMIT = 2000
DEFAULT_MAX_DIM = 120_000
NEAR_DEGENERATE_GAP = 1e-6
# relative density allowed at the walls of an open grid
EDGE_LIMIT = 1e-14


@dataclass
class EigenSolution:
    energies: np.ndarray
    states: np.ndarray
    model: CircuitModel
    converged: bool = True

    @property
    def basis_used(self):
        return self.model.bases

    @property
    def k(self) -> int:
        return len(self.energies)

    @property
    def e01(self) -> float:
        return float(self.energies[1] - self.energies[0])


def _as_real_if_possible(h):
    if sp.issparse(h):
        if h.dtype.kind == "c" and (h.nnz == 0 or np.max(np.abs(h.data.imag)) == 0.0):
            return h.real.tocsc()
        return h.tocsc()
    if h.dtype.kind == "c" and not np.any(h.imag):
        return np.ascontiguousarray(h.real)
    return h


def fix_gauge(states: np.ndarray) -> np.ndarray:
    """Rotate each column so that its largest-magnitude entry is real and positive."""
    states = np.array(states, dtype=complex, copy=True)
    idx = np.argmax(np.abs(states), axis=0)
    cols = np.arange(states.shape[1])
    phase = states[idx, cols] / np.abs(states[idx, cols])
    return states / phase


def diagonalize(h, k: int, dense_limit: int = DENSE_LIMIT, hint=None) -> Tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a Hermitian matrix, ascending, gauge-fixed."""
    dim = h.shape[0]
    if not 1 <= k < dim:
        raise InvalidArgumentError(f"need 1 <= k < dim, got k={k}, dim={dim}")
    h = _as_real_if_possible(h)
    if dim <= dense_limit:
        dense = h.toarray() if sp.issparse(h) else h
        w, v = sla.eigh(dense, subset_by_index=[0, k - 1], driver="evr")
    else:
        w, v = _sparse_lowest(h, k, hint)
    # Rayleigh quotients: rounding now scales with the states' own energy
    # content rather than with the largest (high-charge) diagonal entries.
    w = np.real(np.einsum("ij,ij->j", v.conj(), h @ v)) / np.real(np.einsum("ij,ij->j", v.conj(), v))
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    if not np.all(np.isfinite(w)):
        raise NumericalFailureError("eigensolver returned non-finite energies")
    return w, fix_gauge(v)


def gershgorin_lower(h) -> float:
    """Lower bound on the spectrum of a Hermitian matrix from Gershgorin discs."""
    if sp.issparse(h):
        h = h.tocsr()
        d = h.diagonal().real
        radius = np.asarray(abs(h).sum(axis=1)).ravel() - np.abs(d)
    else:
        d = np.real(np.diag(h))
        radius = np.sum(np.abs(h), axis=1) - np.abs(d)
    return float(np.min(d - radius))


def _factor_below(h, sigma):
    """Symmetric LU of ``h - sigma`` and the number of eigenvalues of ``h`` below ``sigma``.

    With diagonal pivoting forced, ``P(h - sigma)P^T = L D L^H`` up to scaling,
    so the negative pivots count the eigenvalues under the shift (Sylvester).
    """
    a = (h - sigma * sp.identity(h.shape[0], dtype=h.dtype, format="csc")).tocsc()
    lu = spla.splu(a, permc_spec="COLAMD", diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    if np.array_equal(lu.perm_r, lu.perm_c):
        below = int(np.sum(lu.U.diagonal().real < 0))
    else:
        below = -1
    return lu, below


def _arpack_si(h, k, sigma, lu, v0, tol=0.0):
    op = spla.LinearOperator(h.shape, matvec=lu.solve, dtype=h.dtype)
    ncv = min(h.shape[0] - 1, max(2 * k + 8, 24))
    return spla.eigsh(h, k=k, sigma=sigma, OPinv=op, which="LM", v0=v0, ncv=ncv, tol=tol, maxiter=20000)


def _sparse_lowest(h, k, hint=None):
    # Shift-invert Lanczos just below the spectrum.  The sparse LU is cheap for
    # these banded problems, whereas plain Lanczos crawls on stiff grids.
    dim = h.shape[0]
    v0 = np.ones(dim, dtype=h.dtype) / np.sqrt(dim)
    floor = gershgorin_lower(h) - 1e-3
    if hint is None:
        lu, _ = _factor_below(h, floor)
        try:
            hint = np.sort(_arpack_si(h, k, floor, lu, v0, tol=1e-6)[0])
        except spla.ArpackNoConvergence as exc:
            if len(exc.eigenvalues) < 2:
                raise NumericalFailureError("could not bracket the low spectrum") from exc
            hint = np.sort(exc.eigenvalues.real)
    hint = np.asarray(hint, dtype=float)
    spread = max(hint[-1] - hint[0], 1e-6 * (1.0 + abs(hint[0])))
    sigma = max(hint[0] - 0.5 * spread, floor)
    for _ in range(60):
        lu, below = _factor_below(h, sigma)
        if below == 0 or sigma <= floor:
            break
        sigma = max(sigma - spread, floor)
    try:
        return _arpack_si(h, k, sigma, lu, v0)
    except spla.ArpackNoConvergence as exc:
        res = None
        if len(exc.eigenvalues):
            r = h @ exc.eigenvectors - exc.eigenvectors * exc.eigenvalues
            res = float(np.max(np.linalg.norm(r, axis=0)))
        raise NumericalFailureError(f"shift-invert Lanczos did not converge (residual {res})", res) from exc


def eigensolve(model: CircuitModel, k: int = 6, hint=None) -> EigenSolution:
    """Lowest ``k`` eigenpairs of ``model`` in its current basis plan.

    ``hint`` (approximate lowest energies, e.g. from a nearby solve) only
    places the shift of the sparse solver; results agree to solver precision
    with or without it.
    """
    if k < 2:
        raise InvalidArgumentError(f"k must be at least 2, got {k}")
    if k >= model.dim:
        raise InvalidArgumentError(f"k={k} must be below the basis dimension {model.dim}")
    w, v = diagonalize(model.hamiltonian(), k, hint=hint)
    return EigenSolution(w, v, model)


# ---------------------------------------------------------------------------
# Basis convergence
# ---------------------------------------------------------------------------

def _enlarge(basis):
    if isinstance(basis, ChargeBasis):
        return basis.enlarged(1.5)
    if isinstance(basis, OscillatorBasis):
        return basis.enlarged(1.5)
    return basis.enlarged(2.0)


def _edge_amplitude(solution: EigenSolution, mode: int) -> float:
    """Largest density near the walls of an open grid relative to its peak, over all levels."""
    dims = [b.dim for b in solution.model.bases]
    worst = 0.0
    for j in range(solution.k):
        psi = np.abs(solution.states[:, j].reshape(dims)) ** 2
        dens = psi if len(dims) == 1 else np.sum(psi, axis=1 - mode)
        edge = max(dens[0], dens[1], dens[-1], dens[-2])
        worst = max(worst, edge / np.max(dens))
    return float(worst)


def converge(model: CircuitModel, k: int = 6, tol: float = 1e-10, max_dim: int = DEFAULT_MAX_DIM,
             max_rounds: int = 12) -> EigenSolution:
    """Grow each mode's basis until the lowest ``k`` energies move less than ``tol``.

    Charge cutoffs and oscillator levels grow by 1.5x, grid points by 2x; open
    grids are also widened while the states touch the walls.  A mode is done
    once enlarging it moves no energy by ``tol`` or more, and it then keeps
    the smaller of the two bases.  When the dimension ceiling is hit, the best
    solution so far is returned with ``converged=False``.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    if max_dim < model.dim:
        raise InvalidArgumentError(f"starting dimension {model.dim} exceeds the ceiling {max_dim}")
    current = eigensolve(model, k)
    done = [False] * model.n_modes
    for _ in range(max_rounds):
        for i, b in enumerate(current.model.bases):
            if isinstance(b, GridBasis) and not b.periodic and _edge_amplitude(current, i) > EDGE_LIMIT:
                bases = list(current.model.bases)
                bases[i] = b.widened(1.5)
                trial_model = current.model.with_bases(bases)
                if trial_model.dim > max_dim:
                    current.converged = False
                    return current
                current = eigensolve(trial_model, k, hint=current.energies)
                done = [False] * model.n_modes
        if all(done):
            current.converged = True
            return current
        for i, b in enumerate(current.model.bases):
            if done[i]:
                continue
            bases = list(current.model.bases)
            bases[i] = _enlarge(b)
            trial_model = current.model.with_bases(bases)
            if trial_model.dim > max_dim:
                current.converged = False
                return current
            trial = eigensolve(trial_model, k, hint=current.energies)
            if np.max(np.abs(trial.energies - current.energies)) < tol:
                done[i] = True
            else:
                current = trial
    current.converged = all(done)
    return current


# ---------------------------------------------------------------------------
# Worker pool
# ---------------------------------------------------------------------------

def default_workers() -> int:
    env = os.environ.get("PROTECTQ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _energies_at(model: CircuitModel, k: int, hint=None) -> np.ndarray:
    # single-threaded BLAS in every process keeps results independent of worker count
    with threadpool_limits(limits=1):
        try:
            return eigensolve(model, k, hint).energies
        except NumericalFailureError:
            return np.full(k, np.nan)


def parallel_map(func, items: Sequence, workers: Optional[int] = None) -> list:
    """Order-preserving map over ``items`` with a process pool (serial when ``workers == 1``)."""
    workers = default_workers() if workers is None else workers
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(func, items, chunksize=max(1, len(items) // (4 * workers))))


def _call_energies(args):
    return _energies_at(*args)


def energies_over(models: Sequence[CircuitModel], k: int, workers: Optional[int] = None, hint=None) -> np.ndarray:
    """Energies at many independent points; ``hint`` is shared so that results do not depend on scheduling."""
    return np.array(parallel_map(_call_energies, [(m, k, hint) for m in models], workers))


def _merge_bases(a, b):
    """Per-mode union of two basis plans (the larger of each)."""
    out = []
    for x, y in zip(a, b):
        if isinstance(x, ChargeBasis):
            out.append(x if x.cutoff >= y.cutoff else y)
        elif isinstance(x, OscillatorBasis):
            out.append(x if x.levels >= y.levels else y)
        else:
            lo, hi = min(x.phi_min, y.phi_min), max(x.phi_max, y.phi_max)
            step = min(x.step, y.step)
            pts = x.points if x.periodic else int(round((hi - lo) / step)) + 1
            out.append(GridBasis(max(pts, x.points, y.points) if x.periodic else pts, lo, hi, x.periodic))
    return tuple(out)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SpectrumTable:
    """Energies over a 1D or 2D parameter grid; rows in C order of the axes."""

    axes: List[Tuple[str, np.ndarray]]
    energies: np.ndarray
    converged: np.ndarray
    metrics: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = int(np.prod([len(v) for _, v in self.axes]))
        if self.energies.shape[0] != n:
            raise InvalidArgumentError("row count does not match the axes")

    @property
    def e01(self) -> np.ndarray:
        return self.energies[:, 1] - self.energies[:, 0]

    def coordinates(self) -> np.ndarray:
        grids = np.meshgrid(*[v for _, v in self.axes], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise InvalidArgumentError("sweep grid is empty")
    if not np.all(np.isfinite(g)):
        raise InvalidArgumentError("sweep grid contains non-finite values")
    if g.size > 1 and not (np.all(np.diff(g) > 0) or np.all(np.diff(g) < 0)):
        raise InvalidArgumentError("sweep grid must be strictly monotone")
    return g


def _with_values(model: CircuitModel, names, values) -> CircuitModel:
    for name, v in zip(names, values):
        model = model.with_param(name, v)
    return model


def sweep(model: CircuitModel, parameter, grid, k: int = 6, tol: float = 1e-10,
          workers: Optional[int] = None, max_dim: int = DEFAULT_MAX_DIM, fixed_basis: bool = False,
          hint=None) -> SpectrumTable:
    """Lowest ``k`` energies over a parameter grid.

    ``parameter`` is one name (``n_gate``, ``phi_ext`` or a spec field) with a
    1D grid, or a pair of names with a pair of grids.  The basis converged at
    the first grid point is reused everywhere after checking convergence at
    the last point too; ``fixed_basis=True`` skips convergence entirely and uses
    the model's own basis plan.
    """
    if isinstance(parameter, str):
        names, grids = [parameter], [_check_grid(grid)]
    else:
        names = list(parameter)
        if len(names) not in (1, 2) or len(grid) != len(names):
            raise InvalidArgumentError("give one grid per swept parameter (at most two)")
        grids = [_check_grid(g) for g in grid]
    for name in names:
        model.get_param(name)
    mesh = np.stack([m.ravel() for m in np.meshgrid(*grids, indexing="ij")], axis=1)

    ok = True
    bases = model.bases
    if not fixed_basis:
        first = converge(_with_values(model, names, mesh[0]), k, tol, max_dim)
        bases, ok = first.model.bases, first.converged
        if len(mesh) > 1:
            last = converge(_with_values(model, names, mesh[-1]).with_bases(bases), k, tol, max_dim)
            bases = _merge_bases(bases, last.model.bases)
            ok = ok and last.converged
    models = [_with_values(model, names, row).with_bases(bases) for row in mesh]
    if not fixed_basis:
        hint = first.energies
    energies = energies_over(models, k, workers, hint)
    finite = np.all(np.isfinite(energies), axis=1)
    return SpectrumTable([(n, g) for n, g in zip(names, grids)], energies, finite & ok)


# ---------------------------------------------------------------------------
# Susceptibilities
# ---------------------------------------------------------------------------

@dataclass
class SlopeEstimate:
    value: float
    error: float
    coarse: float
    hellmann_feynman: Optional[float] = None

    def __abs__(self):
        return abs(self.value)

    def __float__(self):
        return float(self.value)


def _point_model(model: CircuitModel, parameter: str, point) -> CircuitModel:
    return model if point is None else model.with_param(parameter, point)


def hellmann_feynman_slope(solution: EigenSolution, parameter: str) -> float:
    """``dE01/dlambda`` from expectation values of the exact ``dH/dlambda``."""
    model = solution.model
    if parameter == "phi_ext":
        d = mdl.flux_derivative_operator(model)
    elif parameter == "n_gate":
        d = mdl.charge_derivative_operator(model)
    else:
        raise InvalidArgumentError("Hellmann-Feynman slopes are available for n_gate and phi_ext only")
    v = solution.states[:, :2]
    expect = np.real(np.einsum("ij,ij->j", v.conj(), d @ v))
    return float(expect[1] - expect[0])


def dispersion_slope(model: CircuitModel, parameter: str, point: Optional[float] = None, step: float = 1e-4,
                     tol: float = 1e-10, converge_basis: bool = True, k: int = 4) -> SlopeEstimate:
    """``dE01/dlambda`` by central differences with one Richardson halving.

    The basis is converged at the evaluation point and then held fixed for
    the four displaced solves, so basis changes cannot masquerade as slope.
    """
    if not step > 0:
        raise InvalidArgumentError(f"step must be positive, got {step}")
    base = _point_model(model, parameter, point)
    if converge_basis:
        sol = converge(base, k, tol)
        base = sol.model
    else:
        sol = eigensolve(base, k)
    lam = float(base.get_param(parameter))

    def e01(x):
        e = eigensolve(base.with_param(parameter, x), k, hint=sol.energies).energies
        return e[1] - e[0]

    d1 = (e01(lam + step) - e01(lam - step)) / (2 * step)
    d2 = (e01(lam + step / 2) - e01(lam - step / 2)) / step
    if not (np.isfinite(d1) and np.isfinite(d2)):
        raise NumericalFailureError("non-finite energies in the finite-difference stencil")
    refined = (4.0 * d2 - d1) / 3.0
    try:
        hf = hellmann_feynman_slope(sol, parameter)
    except (InvalidArgumentError, ChannelNotPresentError):
        hf = None
    return SlopeEstimate(float(refined), float(abs(d2 - d1) / 3.0), float(d1), hf)


@dataclass
class DispersionResult:
    amplitude: float
    mean: float
    eta: float
    arg_max: float
    arg_min: float
    scan: SpectrumTable
    excluded: np.ndarray


def dispersion_amplitude(model: CircuitModel, parameter: str, points: int = 101, tol: float = 1e-10,
                         workers: Optional[int] = None, refine: bool = True, half_period: bool = True,
                         k: int = 4) -> DispersionResult:
    """Peak-to-peak variation of ``E01`` over one period of ``n_gate`` or ``phi_ext``.

    Every model here is even in its bias (``lambda -> -lambda``), so by default
    only ``[0, 1/2]`` is scanned; with ``points`` odd this samples the same
    nodes as a ``2*points - 1`` scan of the full period.  Extrema found on the
    coarse scan are polished with a bounded scalar search.
    """
    if parameter not in ("n_gate", "phi_ext"):
        raise InvalidArgumentError("dispersion amplitude needs a periodic bias (n_gate or phi_ext)")
    model.get_param(parameter)
    if points < 3:
        raise InvalidArgumentError("need at least 3 scan points")
    hi = 0.5 if half_period else 1.0
    grid = np.linspace(0.0, hi, points)
    a = converge(model.with_param(parameter, 0.0), k, tol)
    b = converge(model.with_param(parameter, 0.5).with_bases(a.model.bases), k, tol)
    bases = _merge_bases(a.model.bases, b.model.bases)
    ok = a.converged and b.converged
    fixed = model.with_bases(bases)
    table = sweep(fixed, parameter, grid, k, workers=workers, fixed_basis=True, hint=a.energies)
    table.converged &= ok
    e01 = table.e01
    good = np.isfinite(e01)
    if not np.any(good):
        raise NumericalFailureError("no finite transition energies on the scan")
    vals, xs = e01[good], grid[good]
    i_max, i_min = int(np.argmax(vals)), int(np.argmin(vals))
    e_max, x_max, e_min, x_min = vals[i_max], xs[i_max], vals[i_min], xs[i_min]
    if refine:
        def f(x):
            e = eigensolve(fixed.with_param(parameter, x), k, hint=a.energies).energies
            return e[1] - e[0]

        for sign, i in ((-1.0, i_max), (1.0, i_min)):
            if 0 < i < len(xs) - 1:
                r = minimize_scalar(lambda x: sign * f(x), bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                                    options={"xatol": 1e-7})
                val = sign * r.fun
                if sign < 0 and val > e_max:
                    e_max, x_max = val, float(r.x)
                if sign > 0 and val < e_min:
                    e_min, x_min = val, float(r.x)
    amp = float(e_max - e_min)
    mean = float(np.mean(vals))
    eta = float(-np.log(amp / abs(mean))) if amp > 0 and mean != 0 else np.inf
    return DispersionResult(amp, mean, eta, float(x_max), float(x_min), table, grid[~good])


def matrix_element(solution: EigenSolution, op, i: int = 0, j: int = 1) -> complex:
    """``<i|op|j>`` in the gauge-fixed eigenbasis."""
    if not (0 <= i < solution.k and 0 <= j < solution.k):
        raise InvalidArgumentError(f"levels ({i}, {j}) outside the {solution.k} computed states")
    if op.shape != (solution.states.shape[0],) * 2:
        raise InvalidArgumentError(f"operator shape {op.shape} does not match basis dimension {solution.states.shape[0]}")
    v = solution.states
    return complex(np.vdot(v[:, i], op @ v[:, j]))


@dataclass
class TransitionElement:
    value: complex
    magnitude: float
    zeta: float
    block_radius: Optional[float] = None


def transition_element(solution: EigenSolution, op) -> TransitionElement:
    """``<0|op|1>`` with its magnitude and ``zeta = -ln|.|``.

    For a quasi-degenerate pair the raw element depends on how the solver
    split the doublet, so the rotation-invariant spectral radius of the
    traceless 2x2 block is reported alongside.
    """
    val = matrix_element(solution, op, 0, 1)
    mag = abs(val)
    zeta = -np.log(mag) if mag > 0 else np.inf
    radius = None
    if solution.e01 < NEAR_DEGENERATE_GAP:
        v = solution.states[:, :2]
        blk = v.conj().T @ (op @ v)
        blk = blk - np.trace(blk) / 2 * np.eye(2)
        radius = float(np.max(np.abs(np.linalg.eigvals(blk))))
    return TransitionElement(val, float(mag), float(zeta), radius)


# ---------------------------------------------------------------------------
# Wavefunctions
# ---------------------------------------------------------------------------

def hermite_functions(levels: int, q) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``psi_m(q)``, shape ``(len(q), levels)``.

    Uses the three-term recurrence on a rescaled sequence so that neither the
    Gaussian factor nor the polynomial growth over/underflows far from the origin.
    """
    q = np.asarray(q, dtype=float).ravel()
    out = np.empty((q.size, levels))
    log_scale = -0.5 * q ** 2 - 0.25 * np.log(np.pi)
    prev = np.zeros_like(q)
    cur = np.ones_like(q)
    out[:, 0] = np.exp(log_scale)
    for m in range(1, levels):
        nxt = np.sqrt(2.0 / m) * q * cur - np.sqrt((m - 1) / m) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e150
        if np.any(big):
            prev[big] *= 1e-150
            cur[big] *= 1e-150
            log_scale[big] += 150 * np.log(10.0)
        with np.errstate(under="ignore", over="ignore"):
            out[:, m] = cur * np.exp(np.minimum(log_scale, 700.0))
    return out


def _phase_matrix(model: CircuitModel, i: int, x: np.ndarray) -> np.ndarray:
    """Map mode ``i`` basis coefficients to amplitudes at laboratory phases ``x``."""
    b = model.bases[i]
    if isinstance(b, ChargeBasis):
        n = np.arange(-b.cutoff, b.cutoff + 1)
        return np.exp(1j * np.outer(x, n)) / np.sqrt(2 * np.pi)
    if isinstance(b, OscillatorBasis):
        zpf = mdl._mode_ops(model, i).phi_zpf
        scale = np.sqrt(2.0) * zpf
        y = (x - model.phase_offset) / scale
        return hermite_functions(b.levels, y) / np.sqrt(scale)
    nodes = b.nodes()
    if b.periodic:
        # the stored vector is chi with psi = exp(i n_g phi) chi; psi itself is periodic
        period = b.phi_max - b.phi_min
        pos = np.mod(x - b.phi_min, period) / b.step
        idx = np.minimum(np.floor(pos).astype(int), b.points - 1)
        frac = pos - idx
        lo, hi = idx, (idx + 1) % b.points
        w_lo = (1 - frac) * np.exp(1j * model.point.n_gate * nodes[lo])
        w_hi = frac * np.exp(1j * model.point.n_gate * nodes[hi])
    else:
        pos = (x - model.phase_offset - b.phi_min) / b.step
        inside = (pos >= 0) & (pos <= b.points - 1)
        idx = np.clip(np.floor(pos).astype(int), 0, b.points - 2)
        frac = pos - idx
        lo, hi = idx, idx + 1
        w_lo, w_hi = (1 - frac) * inside, frac * inside
    t = np.zeros((x.size, b.points), dtype=complex)
    rows = np.arange(x.size)
    np.add.at(t, (rows, lo), w_lo)
    np.add.at(t, (rows, hi), w_hi)
    return t / np.sqrt(b.step)


@dataclass
class Wavefunction:
    """Sampled amplitudes; ``coords`` holds one array per axis and ``cell`` the volume element."""

    coords: Tuple[np.ndarray, ...]
    amplitudes: np.ndarray
    cell: float
    kind: str
    raw_norm: float

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _uniform_axis(x, name) -> Tuple[np.ndarray, float]:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2 or not np.all(np.isfinite(x)):
        raise InvalidArgumentError(f"{name} grid needs at least two finite points")
    d = np.diff(x)
    if np.any(d <= 0) or np.ptp(d) > 1e-9 * max(abs(d[0]), 1e-300) * x.size:
        raise InvalidArgumentError(f"{name} grid must be uniform and increasing")
    return x, float(d[0])


def wavefunction(solution: EigenSolution, level: int, phase=None, charges=None, theta=None, phi=None,
                 normalize: bool = True) -> Wavefunction:
    """Amplitudes of eigenstate ``level`` on a requested grid.

    Pass ``phase`` (1D phase grid, single-mode models), ``charges`` (integer
    charge states, charge-basis models) or ``theta`` and ``phi`` (2D grid,
    two-mode models).  Amplitudes are rescaled so that ``sum |psi|^2 * cell``
    is one; the pre-rescaling value is kept as ``raw_norm``.
    """
    if not 0 <= level < solution.k:
        raise InvalidArgumentError(f"level {level} outside the {solution.k} computed states")
    model = solution.model
    c = solution.states[:, level]
    if charges is not None:
        b = model.bases[0] if model.n_modes == 1 else None
        if not isinstance(b, ChargeBasis):
            raise InvalidArgumentError("charge amplitudes need a single-mode charge-basis model")
        n = np.asarray(charges)
        if n.size == 0 or not np.all(n == np.round(n)):
            raise InvalidArgumentError("charge index set must be nonempty integers")
        n = n.astype(int).ravel()
        amp = np.where(np.abs(n) <= b.cutoff, c[np.clip(n + b.cutoff, 0, b.dim - 1)], 0.0)
        return _finish((n.astype(float),), amp, 1.0, "charge", normalize)
    if phase is not None:
        if model.n_modes != 1:
            raise InvalidArgumentError("use theta and phi grids for two-mode models")
        x, dx = _uniform_axis(phase, "phase")
        amp = _phase_matrix(model, 0, x) @ c
        return _finish((x,), amp, dx, "phase", normalize)
    if theta is not None and phi is not None:
        if model.n_modes != 2:
            raise InvalidArgumentError("2D grids need a two-mode model")
        t, dt = _uniform_axis(theta, "theta")
        p, dp = _uniform_axis(phi, "phi")
        coeff = c.reshape(model.bases[0].dim, model.bases[1].dim)
        amp = _phase_matrix(model, 0, t) @ coeff @ _phase_matrix(model, 1, p).T
        return _finish((t, p), amp, dt * dp, "theta_phi", normalize)
    raise InvalidArgumentError("give a phase grid, a charge index set, or theta and phi grids")


def _finish(coords, amp, cell, kind, normalize):
    norm = float(np.sum(np.abs(amp) ** 2) * cell)
    if normalize:
        if norm <= 0:
            raise InvalidArgumentError("requested grid misses the wavefunction support entirely")
        amp = amp / np.sqrt(norm)
    return Wavefunction(tuple(coords), amp, cell, kind, norm)


def disjointness(psi0: Wavefunction, psi1: Wavefunction) -> float:
    """Discrete ``integral |psi0|^2 |psi1|^2`` over the common grid."""
    if psi0.amplitudes.shape != psi1.amplitudes.shape or len(psi0.coords) != len(psi1.coords):
        raise InvalidArgumentError("wavefunctions are sampled on different grids")
    for a, b in zip(psi0.coords, psi1.coords):
        if a.shape != b.shape or not np.allclose(a, b, rtol=0, atol=1e-12):
            raise InvalidArgumentError("wavefunctions are sampled on different grids")
    if not np.isclose(psi0.cell, psi1.cell, rtol=1e-12):
        raise InvalidArgumentError("wavefunctions have different cell sizes")
    return float(np.sum(psi0.density * psi1.density) * psi0.cell)


def phase_marginal(solution: EigenSolution, level: int, phi) -> np.ndarray:
    """Density of the extended mode after integrating out the other mode exactly."""
    model = solution.model
    x = np.asarray(phi, dtype=float).ravel()
    c = solution.states[:, level]
    if model.n_modes == 1:
        return np.abs(_phase_matrix(model, 0, x) @ c) ** 2
    coeff = c.reshape(model.bases[0].dim, model.bases[1].dim)
    # the charge basis of the first mode is orthonormal, so the theta integral is a sum over rows
    amp = coeff @ _phase_matrix(model, 1, x).T
    return np.sum(np.abs(amp) ** 2, axis=0)


def fluxon_parity_weights(solution: EigenSolution, level: int, points_per_well: int = 64,
                          wells: Optional[int] = None) -> Tuple[float, float]:
    """Probability of ``level`` within ``pi/2`` of even vs odd multiples of ``pi`` in ``phi``."""
    model = solution.model
    if wells is None:
        b = model.bases[-1]
        reach = (b.phi_max - b.phi_min) / 2 if isinstance(b, GridBasis) else \
            np.sqrt(2.0 * b.levels + 1) * np.sqrt(2.0) * mdl._mode_ops(model, model.n_modes - 1).phi_zpf
        wells = int(np.ceil((reach + abs(model.phase_offset)) / np.pi)) + 1
    edges = np.pi * (np.arange(-wells, wells + 1) - 0.5)
    x = np.linspace(edges[0], edges[-1], 2 * wells * points_per_well + 1)
    rho = phase_marginal(solution, level, x)
    w = np.full(x.size, x[1] - x[0])
    w[0] = w[-1] = w[0] / 2
    m = np.rint(x / np.pi).astype(int)
    even = float(np.sum((rho * w)[m % 2 == 0]))
    odd = float(np.sum((rho * w)[m % 2 != 0]))
    return even, odd


def charge_parity_weights(solution: EigenSolution, level: int) -> Tuple[float, float]:
    """Probability of ``level`` on even vs odd Cooper-pair numbers (charge-basis models)."""
    model = solution.model
    b = model.bases[0]
    if not isinstance(b, ChargeBasis):
        raise InvalidArgumentError("charge-parity weights need a charge basis for the first mode")
    c = solution.states[:, level].reshape(b.dim, -1)
    p = np.sum(np.abs(c) ** 2, axis=1)
    n = np.arange(-b.cutoff, b.cutoff + 1)
    return float(np.sum(p[n % 2 == 0])), float(np.sum(p[n % 2 != 0]))


# ---------------------------------------------------------------------------
# Oracle cross-check
# ---------------------------------------------------------------------------


@dataclass
class OracleReport:
    basis_energies: np.ndarray
    grid_energies: np.ndarray
    discrepancy: float
    absolute: float
    basis_converged: bool
    basis_used: tuple
    grid_used: tuple
    grid_raw: np.ndarray

    @property
    def agrees(self) -> bool:
        return self.discrepancy < 1e-6


def relative_discrepancy(a, b) -> float:
    """``max |a_i - b_i| / max |a_i|``: errors measured on the scale of the spectrum."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), 1e-300))


def _richardson(levels: List[np.ndarray]) -> np.ndarray:
    """Eliminate ``h^2, h^4, ...`` error terms from solves at ``h, h/2, h/4, ...``."""
    table = [np.asarray(e, dtype=float) for e in levels]
    order = 2
    while len(table) > 1:
        f = 2.0 ** order
        table = [(f * table[i + 1] - table[i]) / (f - 1) for i in range(len(table) - 1)]
        order += 2
    return table[0]


def grid_energies(model: CircuitModel, k: int = 5, points: Optional[int] = None,
                  refinements: Optional[int] = None, max_dim: int = 400_000, hint=None) -> Tuple[np.ndarray, tuple, np.ndarray]:
    """Real-space finite-difference energies, Richardson-extrapolated over grid halvings.

    Extended modes are put on an open grid that is widened until the states
    no longer touch the walls.  Returns the extrapolated energies, the
    coarsest grid plan and the raw energies of every refinement.
    """
    bases = mdl.grid_bases(model, points)
    grid_modes = [i for i, b in enumerate(bases) if isinstance(b, GridBasis)]
    if not grid_modes:
        raise InvalidArgumentError(f"{model.family} model has no grid-representable mode")
    gm = model.with_bases(bases)
    sol = eigensolve(gm, k, hint)
    for _ in range(8):
        wide = [i for i in grid_modes if not gm.bases[i].periodic and _edge_amplitude(sol, i) > EDGE_LIMIT]
        if not wide:
            break
        nb = list(gm.bases)
        for i in wide:
            nb[i] = nb[i].widened(1.5)
        gm = gm.with_bases(nb)
        sol = eigensolve(gm, k, sol.energies)
    if refinements is None:
        refinements = 3 if model.n_modes == 1 else 2
    raw = [sol.energies]
    cur = gm
    for _ in range(refinements - 1):
        nb = list(cur.bases)
        for i in grid_modes:
            nb[i] = nb[i].enlarged(2.0)
        cur = cur.with_bases(nb)
        if cur.dim > max_dim:
            break
        raw.append(eigensolve(cur, k, raw[-1]).energies)
    return _richardson(raw), gm.bases, np.array(raw)


def cross_validate(model: CircuitModel, point: Optional[ControlPointLike] = None, k: int = 5, tol: float = 1e-10,
                   points: Optional[int] = None, max_dim: int = DEFAULT_MAX_DIM) -> OracleReport:
    """Solve ``model`` in its basis expansion and on a real-space grid and compare.

    The discrepancy is ``max_i |E_i^basis - E_i^grid| / max_i |E_i^basis|`` over
    the lowest ``k`` levels.
    """
    if point is not None:
        model = model.with_point(**point) if isinstance(point, dict) else dataclasses.replace(model, point=point)
    basis = converge(model, k, tol, max_dim)
    grid, plan, raw = grid_energies(basis.model, k, points, hint=basis.energies)
    e = basis.energies
    return OracleReport(e, grid, relative_discrepancy(e, grid), float(np.max(np.abs(e - grid))),
                        basis.converged, basis.model.bases, plan, raw)
