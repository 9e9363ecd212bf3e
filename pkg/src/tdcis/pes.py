"""Photoelectron spectra by wave-function splitting.

At each splitting time the channel wave packets are divided by a smooth
logistic mask S(r) into an inner part, which keeps evolving under the full
CIS Hamiltonian, and an outer part.  Outer parts are treated as free
electrons in the laser field: they are projected on plane waves and carry
the analytic Volkov phase up to the final time T, while the ion left
behind evolves with its own (diagonal, optionally field-mixed) propagator.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm
from scipy.special import expit, spherical_jn, sph_harm_y

from . import constants as C
from .errors import ConfigurationError

log = logging.getLogger(__name__)


def splitting_function(r, r_c, delta):
    """Logistic mask S(r) = 1 / (1 + exp(-(r - r_c)/delta))."""
    return expit((np.asarray(r, dtype=float) - r_c) / delta)


@dataclass(frozen=True)
class SplittingConfig:
    """Splitting radius r_c, softness delta, split times and final time T."""

    r_c: float
    delta: float
    times: tuple
    T: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigurationError("splitting width must be positive")
        if self.r_c < 20.0 * self.delta:
            raise ConfigurationError(f"r_c = {self.r_c} must be at least 20 delta = {20 * self.delta}")
        if any(t > self.T for t in self.times):
            raise ConfigurationError("splitting times must not exceed the final time")
        object.__setattr__(self, "times", tuple(sorted(float(t) for t in self.times)))

    def check_grid(self, grid):
        if self.r_c >= grid.r_max - 5.0 * self.delta:
            raise ConfigurationError(
                f"r_c = {self.r_c} leaves less than 5 delta clearance to r_max = {grid.r_max}"
            )

    @classmethod
    def regular(cls, r_c, delta, t_first, T, cadence=50.0):
        """Splits every ``cadence`` from ``t_first`` plus one at T."""
        times = list(np.arange(t_first, T, cadence)) + [T]
        return cls(r_c, delta, tuple(times), T)


@dataclass(eq=False)
class SplitSegment:
    """Outer amplitudes beta[(channel, l)] captured at time t."""

    t: float
    beta: dict
    basis: object = field(repr=False)

    def norm(self, channel=None):
        return float(
            sum(
                np.vdot(b, b).real
                for (c, _), b in self.beta.items()
                if channel is None or c == channel
            )
        )

    def radial(self, channel):
        """Outer radial functions per l for one channel."""
        return {l: self.basis.radial(l) @ b for (c, l), b in self.beta.items() if c == channel}


def _mask_matrices(basis, r_c, delta):
    s = basis.grid.w * splitting_function(basis.grid.r, r_c, delta)
    out = {}
    for (_, l), _s in basis.blocks():
        if l not in out:
            U = basis.radial(l)
            out[l] = (U * s[:, None]).T @ U
    return out


def ground_contamination(basis, r_c, delta):
    """Largest |S phi_i| over the occupied orbitals."""
    s = splitting_function(basis.grid.r, r_c, delta)
    worst = 0.0
    for orb in basis.occupied:
        u = np.real(orb.u)
        worst = max(worst, float(np.sqrt(np.sum(basis.grid.w * (s * u) ** 2))))
    return worst


class Splitter:
    """Callable hook that performs the split and stores the segments."""

    def __init__(self, basis, config, tol=1e-8):
        config.check_grid(basis.grid)
        contamination = ground_contamination(basis, config.r_c, config.delta)
        if contamination > tol:
            raise ConfigurationError(
                f"splitting mask overlaps occupied orbitals (|S phi| = {contamination:.2e})"
            )
        self.basis = basis
        self.config = config
        self.masks = _mask_matrices(basis, config.r_c, config.delta)
        self.segments = []

    def __call__(self, state, t):
        inner, segment = apply_splitting(state, self.config, t, self.masks)
        state.vector = inner.vector
        self.segments.append(segment)

    def hooks(self):
        return [(t, self) for t in self.config.times]


def apply_splitting(state, config, t_n, masks=None):
    """Split a CIS state at time t_n.

    Returns the inner state (1 - S) chi and the outer SplitSegment
    holding beta = <phi_a| S |chi_i>.
    """
    basis = state.basis
    if masks is None:
        Splitter(basis, config)  # validation only
        masks = _mask_matrices(basis, config.r_c, config.delta)
    inner = state.copy()
    beta = {}
    for (c, l), s in basis.blocks():
        b = masks[l] @ state.vector[s]
        beta[(c, l)] = b
        inner.vector[s] = state.vector[s] - b
    return inner, SplitSegment(float(t_n), beta, basis)


def ion_propagator(channels, hole_p, pulse, t_n, T, mixing=True, dt=0.05):
    """Ionic evolution operator U(T, t_n) on the hole space.

    Solves i dU/dt = -diag(eps) U - A(t) P^T U with P_{ij} = <phi_i|p_z|phi_j>.
    Without mixing, or when all hole couplings vanish, U is the diagonal
    phase exp(i eps (T - t_n)).
    """
    eps = np.array([ch.energy for ch in channels])
    if not mixing or pulse is None or not np.any(hole_p):
        return np.diag(np.exp(1j * eps * (T - t_n)))
    n = max(1, int(np.ceil(abs(T - t_n) / dt)))
    h = (T - t_n) / n
    U = np.eye(len(eps), dtype=complex)
    PT = np.asarray(hole_p).T
    for k in range(n):
        tm = t_n + (k + 0.5) * h
        G = -np.diag(eps) - pulse.vector_potential(tm) * PT
        U = expm(-1j * h * G) @ U
    return U


def vector_potential_integral(pulse, t_n, T, rtol_phase=1e-8, p_max=1.0):
    """int_{t_n}^T A(tau) d tau by Simpson's rule, refined until the phase
    p_max * integral changes by less than ``rtol_phase``."""
    if pulse is None or pulse.F0 == 0.0 or T == t_n:
        return 0.0
    n = 64
    prev = None
    while True:
        t = np.linspace(t_n, T, 2 * n + 1)
        val = simpson(pulse.vector_potential(t), x=t)
        if prev is not None and abs(val - prev) * max(p_max, 1.0) < rtol_phase:
            return float(val)
        if n > 2**22:
            return float(val)
        prev = val
        n *= 2


@dataclass(eq=False)
class SpectrumGrid:
    """Momentum/polar-angle grid with per-channel complex accumulators.

    The polar grid uses Gauss-Legendre nodes in cos(theta) so that angle
    integration is exact for the partial waves present.
    """

    p: np.ndarray
    theta: np.ndarray
    theta_weights: np.ndarray
    amplitudes: dict = field(default_factory=dict)

    @classmethod
    def create(cls, p_max, n_p, n_theta=32, p_min=None):
        p_min = p_max / n_p if p_min is None else p_min
        x, wx = np.polynomial.legendre.leggauss(n_theta)
        order = np.argsort(-x)  # theta ascending
        return cls(np.linspace(p_min, p_max, n_p), np.arccos(x[order]), wx[order])

    @property
    def energy(self):
        return 0.5 * self.p**2

    def distribution(self):
        """d2P/dE dOmega = p sum_i |C_i|^2, shape (n_p, n_theta)."""
        total = np.zeros((self.p.size, self.theta.size))
        for key in sorted(self.amplitudes):
            total += np.abs(self.amplitudes[key]) ** 2
        return self.p[:, None] * total


def bessel_tables(grid, p, l_values):
    """j_l(p r) r w on the grid for each l, shape (n_p, n_r)."""
    pr = np.outer(p, grid.r)
    return {l: spherical_jn(l, pr) * (grid.r * grid.w)[None, :] for l in l_values}


def volkov_evolve(segment, channel, pulse, T, spectrum, tables=None, bandwidth_tol=1e-3):
    """Project one channel of a segment on Volkov states at time T.

    Returns C(p, theta) for that channel (without the ionic phase).
    """
    basis = segment.basis
    ch = basis.channels[channel]
    radial = segment.radial(channel)
    if tables is None:
        tables = bessel_tables(basis.grid, spectrum.p, radial.keys())
    p = spectrum.p
    amp = np.zeros((p.size, spectrum.theta.size), dtype=complex)
    captured = 0.0
    for l, g in radial.items():
        R = tables[l] @ g
        # norm in momentum space: (2/pi) int p^2 |R_l|^2 dp
        captured += float(np.trapezoid(2.0 / np.pi * p**2 * np.abs(R) ** 2, p))
        Y = sph_harm_y(l, ch.m, spectrum.theta, 0.0)
        amp += np.sqrt(2.0 / np.pi) * (-1j) ** l * np.outer(R, Y)
    K = vector_potential_integral(pulse, segment.t, T, p_max=float(p[-1]))
    phase = 0.5 * p[:, None] ** 2 * (T - segment.t) + p[:, None] * np.cos(spectrum.theta)[None, :] * K
    amp *= np.exp(-1j * phase)
    norm = segment.norm(channel)
    if norm > 0:
        deficit = (norm - captured) / norm
        if deficit > bandwidth_tol:
            warnings.warn(f"momentum grid misses {deficit:.2%} of the segment norm", RuntimeWarning)
    return amp


def assemble_spectrum(segments, pulse, T, spectrum, dipole=None, mixing=False):
    """Coherent sum over splitting times, incoherent over channels.

    Each channel contribution is multiplied by the ionic propagator; with
    ``mixing`` the off-diagonal field coupling between holes is included.
    """
    if not segments:
        return spectrum
    basis = segments[0].basis
    channels = basis.channels
    ls = sorted({l for seg in segments for (_, l) in seg.beta})
    tables = bessel_tables(basis.grid, spectrum.p, ls)
    hole_p = dipole.hole_hole_p if dipole is not None else np.zeros((len(channels),) * 2)
    acc = {ch.index: np.zeros((spectrum.p.size, spectrum.theta.size), dtype=complex) for ch in channels}
    for seg in segments:
        U = ion_propagator(channels, hole_p, pulse, seg.t, T, mixing=mixing)
        parts = {ch.index: volkov_evolve(seg, ch.index, pulse, T, spectrum, tables) for ch in channels}
        for i in acc:
            for j, part in parts.items():
                if U[i, j] != 0:
                    acc[i] += U[i, j] * part
    for i, a in acc.items():
        spectrum.amplitudes[i] = spectrum.amplitudes.get(i, 0) + a
    return spectrum


def angle_integrate(spectrum, distribution=None):
    """dP/dE = 2 pi int sin(theta) d theta d2P/dE dOmega."""
    d = spectrum.distribution() if distribution is None else distribution
    return 2.0 * np.pi * d @ spectrum.theta_weights


def total_probability(spectrum):
    """int dP/dE dE over the momentum grid (trapezoid in E)."""
    return float(np.trapezoid(angle_integrate(spectrum), spectrum.energy))


def find_peaks(energy, signal, min_height=1e-3):
    """Local maxima above ``min_height`` times the global maximum, refined by a parabola."""
    from scipy.signal import find_peaks as _fp

    idx, _ = _fp(signal, height=min_height * np.max(signal))
    out = []
    for k in idx:
        if 0 < k < signal.size - 1:
            y0, y1, y2 = signal[k - 1 : k + 2]
            den = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
            de = energy[k + 1] - energy[k]
            out.append(float(energy[k] + shift * de))
        else:
            out.append(float(energy[k]))
    return np.array(out)


def peak_area(energy, signal, center, half_width):
    sel = (energy >= center - half_width) & (energy <= center + half_width)
    return float(np.trapezoid(signal[sel], energy[sel]))


def anisotropy(theta, values):
    """Least-squares beta_2 and amplitude of c (1 + beta P2(cos theta))."""
    x = np.cos(theta)
    P2 = 0.5 * (3 * x**2 - 1)
    M = np.column_stack([np.ones_like(x), P2])
    coef, *_ = np.linalg.lstsq(M, values, rcond=None)
    return float(coef[1] / coef[0]), float(coef[0])


def write_spectrum(path, spectrum, manifest=None):
    """Double-differential spectrum in lab units (eV, rad, 1/eV/sr)."""
    d = spectrum.distribution() / C.HARTREE_EV
    with open(path, "w") as fh:
        for k, v in (manifest or {}).items():
            fh.write(f"# {k} = {v}\n")
        fh.write("# E_eV theta_rad d2P_dE_dOmega_per_eV_sr\n")
        for i, e in enumerate(spectrum.energy * C.HARTREE_EV):
            for j, th in enumerate(spectrum.theta):
                fh.write(f"{e:.17g} {th:.17g} {d[i, j]:.17g}\n")


def write_energy_spectrum(path, spectrum, manifest=None):
    d = angle_integrate(spectrum) / C.HARTREE_EV
    with open(path, "w") as fh:
        for k, v in (manifest or {}).items():
            fh.write(f"# {k} = {v}\n")
        fh.write("# E_eV dP_dE_per_eV\n")
        for e, v in zip(spectrum.energy * C.HARTREE_EV, d):
            fh.write(f"{e:.17g} {v:.17g}\n")
