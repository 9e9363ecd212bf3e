"""
Photoelectron spectrum of a model atom
======================================

A weak XUV pulse (photon energy 1 hartree, 40 a.u. long) ionizes a
soft-core atom.  The wave packet is split at r_c; outer parts are projected
on Volkov states and summed coherently.  The spectrum shows the one-photon
line at omega - Ip and an above-threshold line one photon higher.
"""

import numpy as np

from tdcis import constants as C
from tdcis.config import default_config_text, parse_config
from tdcis.pes import angle_integrate
from tdcis.runner import _pes_core

cfg = parse_config(default_config_text("model_pes"))
out = _pes_core(cfg)
summary = out["summary"]

print(f"ionization potential  {summary['ionization_potential_eV']:.3f} eV")
print(f"pulse bandwidth       {summary['bandwidth_eV']:.3f} eV")
print(f"absorbed norm         {summary['absorbed_norm']:.6f}")
print(f"integrated spectrum   {summary['spectrum_total']:.6f}")
for peak in summary["peaks"]:
    if peak["position_eV"] is None:
        print(f"{peak['photons']}-photon line near {peak['expected_eV']:.3f} eV is below the detection threshold")
        continue
    print(
        f"{peak['photons']}-photon line: expected {peak['expected_eV']:7.3f} eV, "
        f"found {peak['position_eV']:7.3f} eV, area {peak['area']:.3e}, beta2 {peak['beta2']:.4f}"
    )

# An s electron absorbing one photon leaves as a pure p wave, so the angular
# distribution at the line centre follows cos^2(theta) (beta2 = 2).
spec = out["spectrum"]
k = int(np.argmax(angle_integrate(spec)))
row = spec.distribution()[k]
print("\ntheta (deg)   d2P/dE dOmega / peak   cos^2(theta)")
for th, v in zip(spec.theta[::4], row[::4]):
    print(f"{np.degrees(th):9.1f}   {v / row.max():18.4f}   {np.cos(th) ** 2:12.4f}")

# The coarse energy-resolved spectrum in eV, thinned for display.
E = spec.energy * C.HARTREE_EV
dPdE = angle_integrate(spec) / C.HARTREE_EV
print("\nE (eV)    dP/dE (1/eV)")
for e, v in zip(E[::60], dPdE[::60]):
    print(f"{e:7.2f}   {v:.3e}")
