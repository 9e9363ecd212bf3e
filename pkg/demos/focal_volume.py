"""
Focal-volume averaging
======================

An N-photon signal S = c F^N measured in a Gaussian focus is a sum over
all fluences present in the interaction volume.  Below saturation the
volume signal still scales as n_phot^N; once the focus saturates, the
growing outer volume dilutes the apparent order.
"""

import math

from tdcis.beam import (
    BeamProfile,
    effective_order,
    linear_reference,
    volume_signal,
    volume_signal_direct,
    volume_signal_monte_carlo,
)

beam = BeamProfile(w0=2.0, z0=10.0, n_phot=1000.0)
print(f"peak fluence {beam.max_fluence:.2f} photons/um^2")

# A linear signal integrates to sigma * 4 n ln2 per unit length.
print(f"linear: {volume_signal(lambda F: F, beam):.6f} vs exact {linear_reference(1.0, beam):.6f}")

# A quadratic signal against plain (rho, z) quadrature and Monte Carlo.
quad_val = volume_signal(lambda F: F**2, beam)
direct = volume_signal_direct(lambda F: F**2, beam)
mc, err = volume_signal_monte_carlo(lambda F: F**2, beam, n_samples=4_000_000)
print(f"quadratic: substitution {quad_val:.2f}, direct {direct:.2f}, Monte Carlo {mc:.2f} +- {err:.2f}")

# Apparent order of a two-photon signal that saturates at F_sat.
for F_sat in (1e4, 50.0, 10.0, 2.0):
    S = lambda F, Fs=F_sat: -math.expm1(-((F / Fs) ** 2))  # noqa: E731
    print(f"F_sat = {F_sat:8.1f}: effective order {effective_order(S, beam):.3f}")
