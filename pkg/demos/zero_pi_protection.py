"""
Disjoint support in the 0-pi qubit
==================================

In the ideal 0-pi regime the two lowest states live in the theta = 0 and
theta = pi valleys.  They are nearly degenerate, their densities barely
overlap, and the charge matrix element between them is tiny compared to a
transmon.  The realized parameters sit in a much less protected corner.
"""

import numpy as np

from protectq import coherence as coh, presets, spectrum as spc

theta = np.linspace(-np.pi, np.pi, 256, endpoint=False)
phi = np.linspace(-60, 60, 4801)

for name in ("zeropi-ideal", "zeropi-realized", "transmon"):
    sol = spc.converge(presets.model(name), k=4, tol=1e-9)
    e = sol.energies
    if sol.model.n_modes == 2:
        grid = dict(theta=theta, phi=phi)
    else:
        grid = dict(phase=theta)
    d = spc.disjointness(spc.wavefunction(sol, 0, **grid), spc.wavefunction(sol, 1, **grid))
    zeta = coh.relaxation_exponent(sol)
    print(f"{name:16s} E01={e[1] - e[0]:.3e}  E12={e[2] - e[1]:.3e}  overlap={d:.2e}  zeta={zeta:6.2f}")

# Relative relaxation rates under the same white charge noise.
white = coh.NoiseSpec("charge", "white", s0=1.0)
g_zp = coh.relaxation_rate(presets.model("zeropi-ideal"), "charge", white).gamma_1
g_tr = coh.relaxation_rate(presets.model("transmon"), "charge", white).gamma_1
print(f"gamma_1(0-pi ideal) / gamma_1(transmon) = {g_zp / g_tr:.1e}")

# Where the theta density sits: integrate |psi|^2 over phi.
sol = spc.converge(presets.model("zeropi-ideal"), k=4, tol=1e-9)
for lvl in (0, 1):
    w = spc.wavefunction(sol, lvl, theta=theta, phi=phi)
    rho = w.density.sum(axis=1) * (phi[1] - phi[0])
    print(f"level {lvl}: theta density peaks at {theta[np.argmax(rho)] / np.pi:+.2f} pi")
