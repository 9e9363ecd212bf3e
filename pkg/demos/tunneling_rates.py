"""
Tunnelling rates from field-dressed states
==========================================

The ground state of a soft-core atom in a static field becomes a resonance
with complex energy E; Gamma = -2 Im E is its decay rate.  Following the
state over a field scan gives Gamma(F), from which a quasi-static
population model is built and compared with full propagation.
"""

import numpy as np

from tdcis.models import build_model
from tdcis.potential import AbsorbingPotential
from tdcis.propagator import PropagationPlan, Pulse, StaticField, propagate
from tdcis.siegert import (
    cycle_averaged_rate,
    diabatize,
    dressed_eigs,
    scan_adiabatic,
    survival_decay_rate,
    tunneling_population,
)

model = build_model(60, 300, "uniform", "soft-core", depth=-1.5, width=2.0, l_max=10, e_cut=8.0)
H = model.hamiltonian("length", AbsorbingPotential(30.0, 0.01))

# Adiabatic track: at each field keep the state closest to the field-free
# ground state.
fields = np.linspace(0.0, 0.12, 13)
scan, _ = scan_adiabatic(H, fields, 4)
track = diabatize(scan)
print("F (a.u.)   Re E (a.u.)     Gamma (a.u.)   overlap")
for F, s in zip(track.F, track.states):
    print(f"{F:7.3f}   {s.energy.real:+.6f}   {abs(s.gamma) if s.gamma == 0 else s.gamma:.4e}   {s.overlap:.4f}")

# The width of the dressed state is the decay rate of the survival
# probability under a suddenly switched static field.
F = 0.1
state = max(dressed_eigs(H, F, 4), key=lambda s: s.overlap)
traj = propagate(model.basis.ground(), PropagationPlan(0, 500, 0.25, "lanczos"), StaticField(F), H, record_every=5)
t, _, a0, _ = traj.as_arrays()
print(f"\nF = {F}: Gamma {state.gamma:.5e}, survival decay {survival_decay_rate(t, abs(a0) ** 2, (100, 500)):.5e}")

# Averaging the rate over one optical cycle of amplitude f.
rate = track.rate()
for f in (0.06, 0.09, 0.12):
    print(f"f = {f:.2f}: static rate {float(rate(f)):.3e}, cycle-averaged {cycle_averaged_rate(rate, f):.3e}")

# Quasi-static population after a slow 300 a.u. pulse, against propagation.
pulse = Pulse(0.12, 0.01, 300.0)
t_grid = np.linspace(-480, 480, 20001)
model_pop = tunneling_population(track.__class__(track.F, track.states), pulse, t_grid)[-1]
full = propagate(model.basis.ground(), PropagationPlan(-480, 480, 0.2, "lanczos"), pulse, H, record_every=10**9)
print(f"\nground population: rate model {model_pop:.4f}, propagation {abs(full.state.alpha0) ** 2:.4f}")
