"""
Charge dispersion of a transmon
===============================

A Cooper-pair box turns into a transmon as E_J/E_C grows.  The offset-charge
dependence of the qubit frequency flattens exponentially in sqrt(E_J/E_C),
while the anharmonicity only falls off as a power law.
"""

import numpy as np

from protectq import spectrum as spc
from protectq.models import ChargeModeSpec, CircuitModel

E_C = 0.2  # GHz

print(f"{'EJ/EC':>7} {'E01 (GHz)':>10} {'alpha (GHz)':>12} {'dE01 (GHz)':>11} {'eta':>6}")
for ratio in (1, 5, 10, 20, 50, 100):
    model = CircuitModel(ChargeModeSpec(E_C, ratio * E_C))
    sol = spc.converge(model, k=3)
    alpha = (sol.energies[2] - sol.energies[1]) - sol.e01
    disp = spc.dispersion_amplitude(model, "n_gate")
    print(f"{ratio:7g} {sol.e01:10.5f} {alpha:12.5f} {disp.amplitude:11.3e} {disp.eta:6.2f}")

# The bands themselves: at E_J/E_C = 1 the n_g dependence is obvious, at 100 it is gone.
grid = np.linspace(0, 1, 11)
for ratio in (1, 100):
    tab = spc.sweep(CircuitModel(ChargeModeSpec(E_C, ratio * E_C)), "n_gate", grid, k=2, workers=1)
    print(f"E_J/E_C={ratio}: E01(n_g) =", np.array2string(tab.e01, precision=6))
