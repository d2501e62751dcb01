"""
Protection grades and the single-mode landscape
===============================================

First the qualitative grades of every preset at its operating point, then
a coarse version of the (E_J/E_C, E_L/E_C) landscape of a flux mode, with
the flux slope at phi_ext = 0.25 and |<0|n|1>| at phi_ext = 0.45 per cell.
"""

import numpy as np

from protectq import coherence as coh, presets

print(f"{'preset':18s} {'T1':12s} {'charge':15s} {'flux':15s}  eta_n   eta_phi  zeta")
for name in presets.names():
    rep = coh.protection_report(presets.model(name))
    m, g = rep.metrics, rep.grade
    eta = [f"{m[ch]['eta']:6.2f}" if m[ch] else "   -  " for ch in ("charge", "flux")]
    print(f"{name:18s} {g.t1:12s} {g.charge:15s} {g.flux:15s} {eta[0]}  {eta[1]}  {m['relaxation']['zeta']:5.2f}")

ej = np.logspace(-1, 2, 6)
el = np.logspace(-3, 0, 4)
pd = coh.phase_diagram("flux", ej, el)
print("\nlog10 |dE01/dphi_ext| at phi_ext = 0.25 (rows E_L/E_C, columns E_J/E_C)")
print("        " + " ".join(f"{x:7.2g}" for x in ej))
for y, row in zip(el, pd.slope):
    print(f"{y:7.0e} " + " ".join(f"{v:7.2f}" for v in np.log10(row)))
print("\nlog10 |<0|n|1>| at phi_ext = 0.45")
for y, row in zip(el, pd.element):
    print(f"{y:7.0e} " + " ".join(f"{v:7.2f}" for v in np.log10(row)))
