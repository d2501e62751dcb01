"""Per-mode operator matrices and tensor products.

Three representations are supported for a single circuit mode:

* ``ChargeBasis``   -- Cooper-pair number states ``n = -N..N`` of a compact mode.
* ``OscillatorBasis`` -- harmonic-oscillator Fock states of an extended mode.
* ``GridBasis``     -- real-space phase grid with a second-order stencil.

Matrices of dimension above ``SPARSE_THRESHOLD`` are returned in CSR format,
everything else as dense ``complex128`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError, InvalidBasisError, InvalidParameterError

SPARSE_THRESHOLD = 1024

Matrix = Union[np.ndarray, sp.spmatrix]


@dataclass(frozen=True)
class ChargeBasis:
    cutoff: int

    def __post_init__(self):
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise InvalidBasisError(f"charge cutoff must be an integer >= 1, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return 2 * self.cutoff + 1

    def enlarged(self, factor: float = 1.5) -> "ChargeBasis":
        return ChargeBasis(max(self.cutoff + 1, int(np.ceil(self.cutoff * factor))))


@dataclass(frozen=True)
class OscillatorBasis:
    """Fock basis; ``phi_zpf=None`` lets the model pick its natural zero-point spread."""

    levels: int
    phi_zpf: Optional[float] = None

    def __post_init__(self):
        if int(self.levels) != self.levels or self.levels < 2:
            raise InvalidBasisError(f"oscillator levels must be an integer >= 2, got {self.levels}")
        if self.phi_zpf is not None and not self.phi_zpf > 0:
            raise InvalidBasisError(f"phi_zpf must be positive, got {self.phi_zpf}")

    @property
    def dim(self) -> int:
        return self.levels

    def enlarged(self, factor: float = 1.5) -> "OscillatorBasis":
        return OscillatorBasis(max(self.levels + 1, int(np.ceil(self.levels * factor))), self.phi_zpf)


@dataclass(frozen=True)
class GridBasis:
    """Uniform phase grid.

    Periodic grids sample ``[phi_min, phi_max)`` (the right end is identified
    with the left one); open grids sample the closed interval with Dirichlet
    walls one step outside.
    """

    points: int
    phi_min: float
    phi_max: float
    periodic: bool = False

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 3:
            raise InvalidBasisError(f"grid needs at least 3 points, got {self.points}")
        if not (np.isfinite(self.phi_min) and np.isfinite(self.phi_max)) or not self.phi_max > self.phi_min:
            raise InvalidBasisError(f"degenerate grid range [{self.phi_min}, {self.phi_max}]")

    @property
    def dim(self) -> int:
        return self.points

    @property
    def step(self) -> float:
        if self.periodic:
            return (self.phi_max - self.phi_min) / self.points
        return (self.phi_max - self.phi_min) / (self.points - 1)

    def nodes(self) -> np.ndarray:
        return self.phi_min + self.step * np.arange(self.points)

    def enlarged(self, factor: float = 2.0) -> "GridBasis":
        if self.periodic:
            return GridBasis(int(self.points * factor), self.phi_min, self.phi_max, True)
        return GridBasis(int((self.points - 1) * factor) + 1, self.phi_min, self.phi_max, False)

    def widened(self, factor: float = 1.5) -> "GridBasis":
        """Open grid with the same step over a range ``factor`` times wider."""
        centre = 0.5 * (self.phi_min + self.phi_max)
        half = 0.5 * (self.phi_max - self.phi_min) * factor
        n_half = int(np.ceil(half / self.step))
        return GridBasis(2 * n_half + 1, centre - n_half * self.step, centre + n_half * self.step, False)


BasisSpec = Union[ChargeBasis, OscillatorBasis, GridBasis]


@dataclass(frozen=True)
class ModeOperators:
    number_op: Matrix
    phase_op: Optional[Matrix]
    cos_op: Matrix
    sin_op: Matrix
    identity: Matrix
    kinetic: Optional[Matrix] = None
    nodes: Optional[np.ndarray] = None
    phi_zpf: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.identity.shape[0]


def _store(m):
    """Dense below the sparse threshold, CSR above it."""
    if m.shape[0] > SPARSE_THRESHOLD:
        return sp.csr_matrix(m, dtype=complex)
    if sp.issparse(m):
        return m.toarray().astype(complex)
    return np.asarray(m, dtype=complex)


def identity(dim: int) -> Matrix:
    return _store(sp.identity(dim, dtype=complex, format="csr"))


def charge_ops(cutoff: int) -> ModeOperators:
    """Operators of a compact mode in the charge basis ``|n>, n = -N..N``.

    Convention: ``e^{i theta}|n> = |n+1>``.
    """
    basis = ChargeBasis(cutoff)
    dim = basis.dim
    n = sp.diags(np.arange(-cutoff, cutoff + 1, dtype=float), 0, format="csr")
    raise_ = sp.diags(np.ones(dim - 1), -1, format="csr")  # e^{i theta}
    cos = 0.5 * (raise_ + raise_.T)
    sin = -0.5j * (raise_ - raise_.T)
    return ModeOperators(
        number_op=_store(n),
        phase_op=None,
        cos_op=_store(cos),
        sin_op=_store(sin),
        identity=identity(dim),
    )


def charge_shift(cutoff: int, k: int) -> Matrix:
    """``exp(i k theta)`` in the charge basis: shifts ``|n> -> |n+k>``."""
    dim = 2 * cutoff + 1
    if abs(k) >= dim:
        return _store(sp.csr_matrix((dim, dim), dtype=complex))
    return _store(sp.diags(np.ones(dim - abs(k)), -k, shape=(dim, dim), format="csr", dtype=complex))


def hermitian_function(h: np.ndarray, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``func`` to a Hermitian matrix through its spectral decomposition."""
    w, v = np.linalg.eigh(h)
    return (v * func(w)) @ v.conj().T


def oscillator_zpf(E_C: float, E_L: float) -> float:
    """Zero-point phase spread ``(2 E_C / E_L)^(1/4)`` of ``4E_C n^2 + E_L phi^2 / 2``."""
    if not (E_C > 0 and E_L > 0):
        raise InvalidParameterError(f"E_C and E_L must be positive, got E_C={E_C}, E_L={E_L}")
    return (2.0 * E_C / E_L) ** 0.25


def oscillator_ops(levels: int, E_C: Optional[float] = None, E_L: Optional[float] = None,
                   phi_zpf: Optional[float] = None) -> ModeOperators:
    """Operators of an extended mode in the Fock basis.

    ``phi = phi_zpf (a + a^dag)`` and ``n = i n_zpf (a^dag - a)`` with
    ``phi_zpf * n_zpf = 1/2``.  Either pass the energies (natural spread) or
    ``phi_zpf`` directly.  ``cos``/``sin`` are matrix functions of the
    truncated phase operator, i.e. ``(e^{i phi} +- e^{-i phi})/2``.
    """
    if phi_zpf is None:
        if E_C is None or E_L is None:
            raise InvalidParameterError("oscillator_ops needs (E_C, E_L) or phi_zpf")
        phi_zpf = oscillator_zpf(E_C, E_L)
    elif not phi_zpf > 0:
        raise InvalidParameterError(f"phi_zpf must be positive, got {phi_zpf}")
    basis = OscillatorBasis(levels, phi_zpf)
    n_zpf = 0.5 / phi_zpf
    a = np.diag(np.sqrt(np.arange(1, basis.levels, dtype=float)), 1).astype(complex)
    phi = phi_zpf * (a + a.conj().T)
    num = 1j * n_zpf * (a.conj().T - a)
    w, v = np.linalg.eigh(phi)
    cos = (v * np.cos(w)) @ v.conj().T
    sin = (v * np.sin(w)) @ v.conj().T
    return ModeOperators(
        number_op=num,
        phase_op=phi,
        cos_op=cos,
        sin_op=sin,
        identity=np.eye(basis.levels, dtype=complex),
        phi_zpf=phi_zpf,
    )


def grid_ops(points: int, phi_range, periodic: bool, E_C: float,
             offset_charge: float = 0.0) -> ModeOperators:
    """Real-space operators on a uniform phase grid.

    ``kinetic`` is ``4 E_C (n - n_g)^2`` realized as ``-4 E_C d^2/dphi^2`` with
    the three-point stencil.  On periodic grids the offset charge enters as a
    twisted boundary condition, i.e. the wavefunction is represented in the
    gauge ``psi = exp(i n_g phi) chi`` and the wrap-around couplings pick up
    ``exp(-+ 2 pi i n_g)``.  ``number_op`` is the matching central difference.
    """
    lo, hi = phi_range
    basis = GridBasis(points, float(lo), float(hi), bool(periodic))
    if not E_C > 0:
        raise InvalidParameterError(f"E_C must be positive, got {E_C}")
    if not periodic and offset_charge != 0.0:
        raise InvalidBasisError("offset charge requires a periodic grid")
    P, h = basis.points, basis.step
    lap = sp.diags([np.ones(P - 1), -2.0 * np.ones(P), np.ones(P - 1)], [-1, 0, 1],
                   format="lil", dtype=complex)
    fwd = sp.diags([np.ones(P - 1), -np.ones(P - 1)], [1, -1], format="lil", dtype=complex)
    if periodic:
        twist = np.exp(-2j * np.pi * offset_charge * (hi - lo) / (2 * np.pi))
        lap[P - 1, 0] += twist
        lap[0, P - 1] += np.conj(twist)
        fwd[P - 1, 0] += twist
        fwd[0, P - 1] -= np.conj(twist)
    lap = lap.tocsr() / h ** 2
    num = (-0.5j / h) * fwd.tocsr()
    if periodic:
        num = num + offset_charge * sp.identity(P, format="csr")
    nodes = basis.nodes()
    return ModeOperators(
        number_op=_store(num),
        phase_op=_store(sp.diags(nodes.astype(complex), 0, format="csr")),
        cos_op=_store(sp.diags(np.cos(nodes).astype(complex), 0, format="csr")),
        sin_op=_store(sp.diags(np.sin(nodes).astype(complex), 0, format="csr")),
        identity=identity(P),
        kinetic=_store(-4.0 * E_C * lap),
        nodes=nodes,
    )


def grid_potential(ops: ModeOperators, potential) -> Matrix:
    """Diagonal potential matrix from a callable or from samples on the grid nodes."""
    if ops.nodes is None:
        raise InvalidBasisError("grid_potential needs grid operators")
    values = potential(ops.nodes) if callable(potential) else np.asarray(potential, dtype=float)
    if values.shape != ops.nodes.shape:
        raise InvalidArgumentError(f"potential has shape {values.shape}, grid has {ops.nodes.shape}")
    return _store(sp.diags(values.astype(complex), 0, format="csr"))


def _is_square(m) -> bool:
    return len(m.shape) == 2 and m.shape[0] == m.shape[1]


def tensor(a: Matrix, b: Matrix) -> Matrix:
    """Kronecker product ``a (x) b``; the first factor is the slow index."""
    if not (_is_square(a) and _is_square(b)):
        raise InvalidArgumentError(f"tensor needs square factors, got {a.shape} and {b.shape}")
    if sp.issparse(a) or sp.issparse(b) or a.shape[0] * b.shape[0] > SPARSE_THRESHOLD:
        return _store(sp.kron(sp.csr_matrix(a), sp.csr_matrix(b), format="csr"))
    return np.kron(a, b)


def is_hermitian(m: Matrix, rtol: float = 1e-12) -> bool:
    diff = m - m.conj().T
    if sp.issparse(m):
        dmax = abs(diff).max() if diff.nnz else 0.0
        mmax = abs(m).max() if m.nnz else 0.0
    else:
        dmax = np.max(np.abs(diff)) if diff.size else 0.0
        mmax = np.max(np.abs(m)) if m.size else 0.0
    return dmax <= rtol * max(mmax, np.finfo(float).tiny)
