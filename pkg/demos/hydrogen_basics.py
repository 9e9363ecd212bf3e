"""
Hydrogen on a radial grid
=========================

Bound levels, a dipole transition and the static polarizability of
hydrogen, each compared with its closed-form value.
"""

import numpy as np

from tdcis.cis import dipole_element
from tdcis.grid import build_grid, radial_eigensystem, solve_orbitals
from tdcis.models import build_model
from tdcis.potential import bare_coulomb
from tdcis.siegert import diabatize, scan_adiabatic

# A square-root mapped grid clusters points near the nucleus, where the
# 1s orbital has its cusp.  Doubling the point count cuts the error by four.
for n in (2000, 4000, 8000):
    g = build_grid(60.0, n, "sqrt-mapped")
    (e1s, e2s), _ = radial_eigensystem(g, bare_coulomb(g, 1.0).values, 0, count=2)
    print(f"n = {n:5d}   1s {e1s:.9f}   2s {e2s:.9f}   error(1s) {abs(e1s + 0.5):.1e}")

# The 1s -> 2p oscillator strength in length and velocity form.  The exact
# value is 0.4162.
g = build_grid(60.0, 4000, "sqrt-mapped")
occ, virt = solve_orbitals(g, bare_coulomb(g, 1.0), 1, 1.0, n_elec=2)
s, p = occ[0], virt.orbitals[1][0].with_m(0)
dE = p.energy - s.energy
z = dipole_element(g, p, s, "length")
pz = dipole_element(g, p, s, "velocity")
print(f"\nf(1s->2p): length {2 * dE * abs(z) ** 2:.5f}, velocity {2 * abs(pz) ** 2 / dE:.5f}")

# In a weak static field the ground energy drops by alpha F^2 / 2.  A
# quadratic fit over a handful of fields recovers alpha = 4.5 a.u.
model = build_model(60, 1200, "uniform", "bare-coulomb", Z=1, n_elec=2, l_max=3, e_cut=50.0, closed_shell=False)
fields = np.linspace(0.0, 0.005, 6)
scan, _ = scan_adiabatic(model.hamiltonian("length"), fields, 3)
energies = diabatize(scan).energies.real
alpha = -2.0 * np.polyfit(fields**2, energies, 2)[1]
print(f"static polarizability from the Stark shift: {alpha:.4f} a.u. (exact 4.5)")
