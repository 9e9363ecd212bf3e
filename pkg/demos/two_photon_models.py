"""
Two-photon cross-section models
===============================

Two toy models of a resonantly enhanced two-photon cross section: one
intermediate resonance followed by a continuum-continuum step, and a
coherent sum over two resonances.
"""

import numpy as np

from tdcis.analysis import ResonanceModel, find_knees, fwhm, multi_resonance_sigma2, two_step_sigma2

# A broad resonance with a sharp onset and a long high-energy tail, as for
# a shape resonance above a threshold at 67 eV.
w = np.linspace(68.0, 200.0, 6601)
sigma1 = (w - 67.0) ** 2 * np.exp(-(w - 67.0) / 15.0)
print("one-photon curve: peak {:.1f} eV, FWHM {:.1f} eV".format(w[np.argmax(sigma1)], fwhm(w, sigma1)))

# The continuum-continuum step falls off as E^-(l + 7/2) with the
# photoelectron energy, pulling the two-photon peak down and narrowing it.
for l in (0, 1, 3):
    s2 = two_step_sigma2(w, sigma1, l, 67.0)
    print(f"two-step model, l = {l}: peak {w[np.argmax(s2)]:.1f} eV, FWHM {fwhm(w, s2):.1f} eV")

# For a symmetric Lorentzian the same factor still shifts the peak down but
# broadens it: a decreasing power law is log-convex and flattens the top.
wl = np.linspace(80.0, 160.0, 4001)
lor = 1.0 / ((wl - 100.0) ** 2 + 25.0)
s2 = two_step_sigma2(wl, lor, 3, 67.0)
print(f"\nLorentzian input: FWHM {fwhm(wl, lor):.2f} -> {fwhm(wl, s2):.2f} eV, peak {wl[np.argmax(s2)]:.2f} eV")

# Two interfering resonances at 74.3 eV and 107.6 eV with lifetimes of 26 as
# and 11 as.  The narrower, lower one gives the main peak; the broad upper
# one leaves a shoulder on the falling flank.
model = ResonanceModel.from_lifetimes([(74.3, 26.0, 1.0), (107.6, 11.0, 1.0)])
E = np.linspace(50.0, 150.0, 2001)
sig = multi_resonance_sigma2(model, E)
print(f"\nwidths: {model.resonances[0][1]:.2f} eV and {model.resonances[1][1]:.2f} eV")
print(f"main peak at {E[np.argmax(sig)]:.1f} eV, knee at {find_knees(E, sig)[0]:.1f} eV")
for e in range(60, 151, 10):
    k = int(np.argmin(abs(E - e)))
    print(f"{e:4d} eV  {sig[k] / sig.max():.4f}")
