"""Physical constants and unit conversions.

Everything inside the package runs in Hartree atomic units. Lab-facing
inputs and outputs (eV, fs, W/cm^2, cm) are converted here and nowhere else.
"""

import math

# CODATA 2018
HARTREE_EV = 27.211386245988
BOHR_CM = 5.29177210903e-9
AU_TIME_S = 2.4188843265857e-17
AU_TIME_FS = AU_TIME_S * 1e15
AU_TIME_AS = AU_TIME_S * 1e18
SPEED_OF_LIGHT_AU = 137.035999084
HBAR_EV_FS = 0.6582119569

# Peak intensity of a linearly polarised field of amplitude 1 a.u.
# (cycle-averaged, I = c F0^2 / 8 pi in atomic units).
AU_INTENSITY_W_CM2 = 3.50944758e16

LN2 = math.log(2.0)


def ev_to_hartree(value):
    return value / HARTREE_EV


def hartree_to_ev(value):
    return value * HARTREE_EV


def fs_to_au(value):
    return value / AU_TIME_FS


def au_to_fs(value):
    return value * AU_TIME_FS


def intensity_to_field(intensity_w_cm2):
    """Peak field amplitude (a.u.) for a peak intensity in W/cm^2."""
    return (intensity_w_cm2 / AU_INTENSITY_W_CM2) ** 0.5


def field_to_intensity(field_au):
    """Peak intensity in W/cm^2 for a field amplitude in a.u."""
    return field_au**2 * AU_INTENSITY_W_CM2


def width_from_lifetime(lifetime_as):
    """Energy width (eV) of a state with the given lifetime in attoseconds."""
    return HBAR_EV_FS / (lifetime_as * 1e-3)


def cross_section_au_to_cgs(sigma_au, order):
    """Convert an N-photon generalized cross section to cm^(2N) s^(N-1)."""
    return sigma_au * BOHR_CM ** (2 * order) * AU_TIME_S ** (order - 1)


def cross_section_cgs_to_au(sigma_cgs, order):
    return sigma_cgs / (BOHR_CM ** (2 * order) * AU_TIME_S ** (order - 1))
