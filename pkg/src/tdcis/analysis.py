"""Perturbative rate-equation layer built on top of engine yields.

Photon flux of a Gaussian pulse with field envelope F0 exp(-2 ln2 t^2/tau^2):

    j(t) = c F0^2 / (8 pi omega) * exp(-4 ln2 t^2 / tau^2)     (atomic units)

N-photon yields in the perturbative regime are P_N = sigma_N F_N with the
generalized fluence F_N = int j(t)^N dt.  Cross sections come out in
a0^(2N) t0^(N-1) and are reported in cm^(2N) s^(N-1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.stats import linregress

from . import constants as C
from .errors import ConfigurationError, NumericalError

PERTURBATIVE_LIMIT = 0.05


def ponderomotive(intensity_au, omega):
    return intensity_au / (4.0 * omega**2)


def keldysh(intensity_au, omega, ip):
    """Keldysh parameter, with intensity in units of the squared field (a.u.).

    Both sqrt(Ip / 2 Up) and 2 omega sqrt(Ip / 2 I) are evaluated and must
    agree.
    """
    if min(intensity_au, omega, ip) <= 0:
        raise ConfigurationError("intensity, frequency and ionization potential must be positive")
    g1 = math.sqrt(ip / (2.0 * ponderomotive(intensity_au, omega)))
    g2 = 2.0 * omega * math.sqrt(ip / (2.0 * intensity_au))
    if not math.isclose(g1, g2, rel_tol=1e-12):
        raise NumericalError(f"Keldysh forms disagree: {g1} vs {g2}")
    return g1


def keldysh_lab(intensity_wcm2, photon_ev, ip_ev):
    return keldysh(
        intensity_wcm2 / C.AU_INTENSITY_W_CM2, C.ev_to_hartree(photon_ev), C.ev_to_hartree(ip_ev)
    )


def peak_flux(pulse):
    """Peak photon flux c F0^2 / (8 pi omega) in photons / (a0^2 t0)."""
    return C.SPEED_OF_LIGHT_AU * pulse.F0**2 / (8.0 * np.pi * pulse.omega)


def photon_flux(pulse, t):
    return peak_flux(pulse) * np.exp(-4.0 * C.LN2 * np.asarray(t, dtype=float) ** 2 / pulse.tau**2)


def fluence(pulse, order, quadrature=None):
    """Generalized fluence F_N = int j(t)^N dt in a0^(-2N) t0^(1-N).

    Orders 1 and 2 use the closed form
    (c F0^2 / 8 pi omega)^N tau sqrt(pi / (4 N ln2));
    higher orders (or ``quadrature=True``) integrate j^N numerically.
    """
    if order < 1 or int(order) != order:
        raise ConfigurationError("order must be a positive integer")
    use_quad = order >= 3 if quadrature is None else quadrature
    if not use_quad:
        return peak_flux(pulse) ** order * pulse.tau * math.sqrt(math.pi / (4.0 * order * C.LN2))
    j0 = peak_flux(pulse)
    width = pulse.tau / math.sqrt(order)
    val, _ = quad(
        lambda t: math.exp(-4.0 * order * C.LN2 * t * t / pulse.tau**2),
        -12 * width,
        12 * width,
        points=(0.0,),
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
    )
    return j0**order * val


@dataclass
class RateSolution:
    t: np.ndarray
    ground: np.ndarray
    yields: dict

    def final(self, order):
        return float(self.yields[order][-1])


def rate_solve(sigmas, source, depletion=True, t_span=None, n_steps=24000):
    """Integrate the coupled N-photon rate equations with RK4.

        dP0/dt = -sum_N sigma_N j^N P0,   dP_N/dt = sigma_N j^N P0

    Parameters
    ----------
    sigmas : dict
        Order N -> generalized cross section (atomic units).
    source : Pulse or callable
        Pulse (flux from its Gaussian envelope) or a flux function j(t).
    depletion : bool
        With False the ground population is held at 1.
    t_span : (float, float), optional
        Defaults to +-6 tau for a pulse.
    """
    if any(s < 0 for s in sigmas.values()):
        raise ConfigurationError("cross sections must be non-negative")
    if callable(source) and not hasattr(source, "tau"):
        flux = source
        if t_span is None:
            raise ConfigurationError("a flux function needs an explicit time span")
    else:
        flux = lambda t: photon_flux(source, t)  # noqa: E731
        if t_span is None:
            t_span = (-6.0 * source.tau, 6.0 * source.tau)
    orders = sorted(sigmas)
    t = np.linspace(t_span[0], t_span[1], n_steps + 1)
    h = t[1] - t[0]

    def rates(tt):
        j = flux(tt)
        return np.array([sigmas[n] * j**n for n in orders])

    P0 = np.empty(t.size)
    Y = np.zeros((len(orders), t.size))
    P0[0] = 1.0
    r_prev = rates(t[0])
    for k in range(n_steps):
        r_mid = rates(t[k] + 0.5 * h)
        r_next = rates(t[k + 1])
        if depletion:
            p = P0[k]
            s1, s2, s4 = r_prev.sum(), r_mid.sum(), r_next.sum()
            k1 = -s1 * p
            k2 = -s2 * (p + 0.5 * h * k1)
            k3 = -s2 * (p + 0.5 * h * k2)
            k4 = -s4 * (p + h * k3)
            P0[k + 1] = p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            # yields follow from the same stages: dP_N = sigma_N j^N P0
            g1 = p
            g2 = p + 0.5 * h * k1
            g3 = p + 0.5 * h * k2
            g4 = p + h * k3
            Y[:, k + 1] = Y[:, k] + h / 6.0 * (r_prev * g1 + 2.0 * r_mid * (g2 + g3) + r_next * g4)
        else:
            P0[k + 1] = 1.0
            Y[:, k + 1] = Y[:, k] + h / 6.0 * (r_prev + 4.0 * r_mid + r_next)
        r_prev = r_next
    return RateSolution(t, P0, {n: Y[i] for i, n in enumerate(orders)})


def cross_section_from_yield(P, fluence_au, order):
    """sigma_N = P_N / F_N, returned in cm^(2N) s^(N-1).

    A RuntimeWarning flags yields above the perturbative limit (5 %).
    """
    if fluence_au == 0:
        raise ConfigurationError("cross section undefined for zero fluence")
    if P > PERTURBATIVE_LIMIT:
        warnings.warn(f"yield {P:.3g} exceeds the perturbative limit", RuntimeWarning)
    return C.cross_section_au_to_cgs(P / fluence_au, order)


@dataclass
class IonizationRecord:
    """Yields of one engine run: photon energy (eV), intensity (W/cm2), tau (fs)."""

    photon_ev: float
    intensity_wcm2: float
    tau_fs: float
    yields: dict
    channels: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(v < 0 for v in self.yields.values()):
            raise ConfigurationError("yields must be non-negative")
        if sum(self.yields.values()) > 1.0 + 1e-12:
            raise ConfigurationError("summed yields exceed unity")


@dataclass
class OrderFit:
    slope: float
    stderr: float
    intercept: float
    order: int

    @property
    def deviation(self):
        return self.slope - self.order


def order_fit(records, order, key=None):
    """Least-squares slope of ln P versus ln I.

    ``records`` is a list of IonizationRecord (yield taken from
    ``yields[key or order]``) or a pair of arrays (intensities, yields).
    """
    if isinstance(records, tuple) and len(records) == 2:
        I, P = (np.asarray(a, dtype=float) for a in records)
    else:
        k = order if key is None else key
        I = np.array([r.intensity_wcm2 for r in records], dtype=float)
        P = np.array([r.yields[k] for r in records], dtype=float)
    if I.size < 3:
        raise ConfigurationError("an order fit needs at least three intensities")
    if I.max() / I.min() < 10.0 * (1 - 1e-9):
        raise ConfigurationError("intensities must span at least one decade")
    if np.any(P <= 0):
        raise ConfigurationError("yields must be positive for a log-log fit")
    res = linregress(np.log(I), np.log(P))
    return OrderFit(float(res.slope), float(res.stderr), float(res.intercept), int(order))


def bends_below_power_law(intensities, yields, order, n_reference=2):
    """True if the highest-intensity yields fall below the power law fixed
    by the ``n_reference`` lowest points."""
    I = np.asarray(intensities, dtype=float)
    P = np.asarray(yields, dtype=float)
    idx = np.argsort(I)
    I, P = I[idx], P[idx]
    c = np.mean(P[:n_reference] / I[:n_reference] ** order)
    ratio = P / (c * I**order)
    return bool(ratio[-1] < ratio[n_reference - 1] and np.all(np.diff(ratio[n_reference - 1 :]) <= 1e-12))


def two_step_sigma2(photon_ev, sigma1, l, binding_ev, reference=None):
    """Single-intermediate-state model of the two-photon cross section.

    sigma_2 ~ sigma_1(omega) E^(-l - 7/2), where E = 2 omega - binding is
    the photoelectron energy after the second (continuum-continuum)
    absorption.  The curve is scaled so that its maximum equals the maximum
    of ``reference`` (the full two-photon curve) when given, otherwise the
    maximum of ``sigma1``.
    """
    w = np.asarray(photon_ev, dtype=float)
    E = 2.0 * w - binding_ev
    if np.any(E <= 0):
        raise ConfigurationError("photon energies must exceed half the binding energy")
    model = np.asarray(sigma1, dtype=float) * E ** (-l - 3.5)
    target = np.max(reference) if reference is not None else np.max(sigma1)
    return model * (target / np.max(model))


@dataclass
class ResonanceModel:
    """Intermediate resonances (E_res eV, Gamma eV, numerator) and E_initial."""

    resonances: list
    initial_energy: float = 0.0

    def __post_init__(self):
        if not self.resonances:
            raise ConfigurationError("at least one resonance is required")
        for E_r, G, _ in self.resonances:
            if not G > 0:
                raise ConfigurationError(f"resonance at {E_r} eV needs a positive width")

    @classmethod
    def from_lifetimes(cls, entries, initial_energy=0.0):
        """Entries (E_res eV, lifetime as, numerator) with Gamma = hbar / lifetime."""
        return cls([(E, C.width_from_lifetime(tau), num) for E, tau, num in entries], initial_energy)


def multi_resonance_sigma2(model, energy_ev):
    """|sum_M num_M / (E - E_M + i Gamma_M / 2 + E_I)|^2 on a photon-energy grid."""
    E = np.asarray(energy_ev, dtype=float)
    amp = np.zeros(E.shape, dtype=complex)
    for E_r, G, num in model.resonances:
        amp += num / (E - E_r + 0.5j * G + model.initial_energy)
    return np.abs(amp) ** 2


def fwhm(x, y):
    """Full width at half maximum by linear interpolation of the crossings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    half = 0.5 * y[k]
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < y.size - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        raise NumericalError("peak is not resolved inside the grid")
    xl = np.interp(half, [y[left], y[left + 1]], [x[left], x[left + 1]])
    xr = np.interp(half, [y[right], y[right - 1]], [x[right], x[right - 1]])
    return float(xr - xl)


def find_knees(x, y):
    """Shoulders on the falling flank: local minima of |dy/dx| past the peak
    where the slope does not change sign."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.gradient(y, x)
    k0 = int(np.argmax(y))
    out = []
    for k in range(k0 + 2, x.size - 1):
        if abs(d[k]) < abs(d[k - 1]) and abs(d[k]) <= abs(d[k + 1]) and d[k - 1] < 0 and d[k + 1] < 0:
            out.append(float(x[k]))
    return out
