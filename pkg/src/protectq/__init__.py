"""Spectra, noise susceptibilities and protection grades of superconducting circuits.

Modules
-------
operators  basis-agnostic operator algebra (charge, oscillator, grid)
models     circuit Hamiltonians and noise couplings
spectrum   eigensolvers, convergence, sweeps, dispersion, wavefunctions
coherence  rates, T2, protection grades, phase diagrams
presets    named parameter sets
config, output, cli   run configuration and deterministic outputs
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    InvalidArgumentError,
    NumericalFailureError,
    ProtectqError,
)
from .models import (  # noqa: E402
    ChargeModeSpec,
    CircuitModel,
    ControlPoint,
    FluxModeSpec,
    HybridJunctionSpec,
    TwoModeSpec,
)
from .operators import ChargeBasis, GridBasis, OscillatorBasis  # noqa: E402
