"""Field-dressed (adiabatic) eigenstates with an absorbing potential.

For a static field F the length-form CIS Hamiltonian H_0 + F z - i W is
complex symmetric.  Its eigenvalues near the field-free ground energy give
the Stark-shifted position Re E and the tunnelling rate Gamma = -2 Im E.
Following one state across a field scan by maximal overlap with the
field-free ground state yields the diabatic track used in the rate model
P(t) = exp(-int Gamma(F(t')) dt').
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import PchipInterpolator
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

from .errors import ConfigurationError, NumericalError

log = logging.getLogger(__name__)

DENSE_LIMIT = 400


@dataclass(eq=False)
class AdiabaticState:
    F: float
    energy: complex
    vector: np.ndarray = field(repr=False)
    overlap: float
    residual: float = 0.0

    @property
    def gamma(self):
        return -2.0 * self.energy.imag


@dataclass
class DiabaticTrack:
    """States followed by maximal ground-state overlap, one per field."""

    F: np.ndarray
    states: list
    floor: float = 0.5

    @property
    def overlaps(self):
        return np.array([s.overlap for s in self.states])

    @property
    def gammas(self):
        return np.array([s.gamma for s in self.states])

    @property
    def energies(self):
        return np.array([s.energy for s in self.states])

    @property
    def flagged(self):
        """Indices whose overlap fell below the floor (possible track loss)."""
        return np.nonzero(self.overlaps < self.floor)[0]

    def rate(self):
        """Monotone cubic interpolant Gamma(|F|), clipped at zero."""
        g = np.maximum(self.gammas, 0.0)
        if self.F.size == 1:
            return lambda f: np.full_like(np.abs(np.asarray(f, dtype=float)), g[0])
        interp = PchipInterpolator(self.F, g, extrapolate=False)
        return lambda f: np.nan_to_num(interp(np.abs(np.asarray(f, dtype=float))), nan=np.nan)


def symmetric_normalize(v):
    s = np.sqrt(v @ v)
    if abs(s) < 1e-300:
        return v / np.linalg.norm(v)
    return v / s


def ground_overlap(v, ground):
    """|g^T v| / ||v||_2 for the unmodified field-free ground vector g."""
    return float(abs(ground @ v) / np.linalg.norm(v))


def _ground_vector(dim):
    g = np.zeros(dim, dtype=complex)
    g[0] = 1.0
    return g


def dressed_eigs(hamiltonian, F, n_eigs=4, seed_vector=None, target=0.0, ground=None, tol=1e-12):
    """Eigenpairs of H_0 + F z - i W nearest ``target``.

    Distance is measured in the complex plane, |E - target|, so that
    absorber-dominated pseudo-continuum states (large -Im E) with Re E close
    to the target do not displace the narrow resonance.

    Parameters
    ----------
    hamiltonian : CISHamiltonian
        Must use the length form; the absorber is whatever it was built with.
    F : float
        Static field strength (a.u.).
    n_eigs : int
        Number of states returned, sorted by |E - target|.
    seed_vector : ndarray, optional
        Starting vector for the iterative solver.

    Raises
    ------
    NumericalError
        When the iterative solver does not converge; the Ritz residuals of
        whatever converged are reported.
    """
    if hamiltonian.gauge != "length":
        raise ConfigurationError("dressed eigenstates need the length-form Hamiltonian")
    dim = hamiltonian.dim
    n_eigs = min(n_eigs, dim - 2) if dim > 3 else dim
    M = hamiltonian.matrix(F, include_cap=True)
    g = _ground_vector(dim) if ground is None else ground
    if dim <= DENSE_LIMIT:
        w, V = sla.eig(M.toarray())
    else:
        # a small offset keeps the shifted matrix regular when the target
        # is itself an eigenvalue (the field-free reference energy)
        sigma = target + 1e-5 * (1.0 + abs(target)) * (1.0 - 1.0j)
        try:
            w, V = eigs(M, k=min(max(2 * n_eigs, n_eigs + 4), dim - 2), sigma=sigma, v0=seed_vector, tol=tol)
        except ArpackNoConvergence as exc:
            res = [
                float(np.linalg.norm(M @ exc.eigenvectors[:, k] - exc.eigenvalues[k] * exc.eigenvectors[:, k]))
                for k in range(exc.eigenvalues.size)
            ]
            raise NumericalError(f"Arnoldi iteration failed at F={F}", F=F, ritz_residuals=res) from exc
        except ArpackError as exc:
            raise NumericalError(f"Arnoldi iteration failed at F={F}: {exc}", F=F) from exc
    order = np.argsort(np.abs(w - target))[:n_eigs]
    out = []
    for k in order:
        v = symmetric_normalize(V[:, k])
        resid = float(np.linalg.norm(M @ v - w[k] * v) / np.linalg.norm(v))
        out.append(AdiabaticState(float(F), complex(w[k]), v, ground_overlap(v, g), resid))
    return out


def scan_adiabatic(hamiltonian, F_grid, n_eigs=4, target=0.0):
    """Dressed eigenstates over an ascending field grid.

    The eigenvector with the largest ground overlap at one field seeds the
    iterative solver at the next.  Failures are collected rather than
    aborting the scan.

    Returns
    -------
    results : list of (F, list of AdiabaticState)
    failures : list of (F, NumericalError)
    """
    F_grid = np.asarray(F_grid, dtype=float)
    if np.any(np.diff(F_grid) <= 0):
        raise ConfigurationError("field grid must be strictly ascending")
    results, failures = [], []
    seed = None
    for F in F_grid:
        try:
            states = dressed_eigs(hamiltonian, F, n_eigs, seed_vector=seed, target=target)
        except NumericalError as exc:
            log.warning("dressed eigenproblem failed at F=%g: %s", F, exc)
            failures.append((float(F), exc))
            continue
        best = max(states, key=lambda s: s.overlap)
        seed = best.vector
        target = best.energy
        results.append((float(F), states))
    return results, failures


def diabatize(scan, ground=None, floor=0.5):
    """Pick, at each field, the state of maximal overlap with ``ground``.

    ``ground`` defaults to the stored overlaps (the CIS reference).
    """
    Fs, chosen = [], []
    for F, states in scan:
        if ground is not None:
            for s in states:
                s.overlap = ground_overlap(s.vector, ground)
        best = max(states, key=lambda s: s.overlap)
        Fs.append(F)
        chosen.append(best)
    track = DiabaticTrack(np.array(Fs), chosen, floor)
    for k in track.flagged:
        log.warning("diabatic track overlap %.3f below floor at F=%g", track.overlaps[k], track.F[k])
    return track


def tunneling_population(track, pulse, t_grid):
    """P(t) = exp(-int_{t_0}^t Gamma(|F(t')|) dt') on ``t_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    F_t = np.abs(pulse.field(t_grid))
    if F_t.max() > track.F.max() * (1 + 1e-12):
        raise ConfigurationError(
            f"pulse peak |F| = {F_t.max():.4g} exceeds the scanned range {track.F.max():.4g}"
        )
    if track.F.min() > F_t.min() + 1e-12 and track.F.min() > 0:
        raise ConfigurationError("scanned field range does not reach the pulse wings")
    rate = track.rate()(F_t)
    integral = cumulative_simpson(rate, x=t_grid, initial=0.0)
    return np.exp(-integral)


def cycle_averaged_rate(gamma_of_F, f):
    """(1/2 pi) int_0^{2 pi} Gamma(f cos phi) d phi."""
    val, _ = quad(
        lambda phi: float(gamma_of_F(f * np.cos(phi))),
        0.0,
        2.0 * np.pi,
        points=(0.5 * np.pi, np.pi, 1.5 * np.pi),
        epsabs=1e-14,
        epsrel=1e-12,
        limit=200,
    )
    return val / (2.0 * np.pi)


def eta_plateau(gamma_of_eta, etas, tol=0.05):
    """Locate the CAP-strength plateau of a resonance width.

    Parameters
    ----------
    gamma_of_eta : callable or array
        Either a function eta -> Gamma or precomputed Gamma values.
    etas : array
        Ascending strengths, log-spaced.

    Returns
    -------
    dict with the plateau window (eta_lo, eta_hi), its centre value of Gamma
    and the relative variation across the window.  The window is the widest
    run of consecutive strengths covering at least a decade whose relative
    spread stays below ``tol``; failing that, the decade-wide run with the
    smallest spread is reported with ``stable=False``.
    """
    etas = np.asarray(etas, dtype=float)
    gam = np.asarray(gamma_of_eta if not callable(gamma_of_eta) else [gamma_of_eta(e) for e in etas])
    best = None
    for i in range(etas.size):
        for j in range(i + 1, etas.size):
            if etas[j] / etas[i] < 10.0 * (1 - 1e-9):
                continue
            g = gam[i : j + 1]
            spread = float((g.max() - g.min()) / np.median(g))
            key = (spread <= tol, np.log(etas[j] / etas[i]) if spread <= tol else -spread)
            if best is None or key > best[0]:
                best = (key, i, j, spread)
    if best is None:
        raise ConfigurationError("CAP scan must span at least one decade")
    _, i, j, spread = best
    return {
        "eta_lo": float(etas[i]),
        "eta_hi": float(etas[j]),
        "gamma": float(np.median(gam[i : j + 1])),
        "variation": spread,
        "stable": spread <= tol,
        "etas": etas,
        "gammas": gam,
    }


def write_scan(path, scan):
    with open(path, "w") as fh:
        fh.write("# F re_E im_E gamma overlap\n")
        for F, states in scan:
            for s in states:
                fh.write(f"{F:.17g} {s.energy.real:.17g} {s.energy.imag:.17g} {s.gamma:.17g} {s.overlap:.17g}\n")


def survival_decay_rate(times, survival, fit_window):
    """Exponential rate from a log-linear fit of survival probability."""
    times = np.asarray(times)
    sel = (times >= fit_window[0]) & (times <= fit_window[1])
    slope, _ = np.polyfit(times[sel], np.log(np.asarray(survival)[sel]), 1)
    return float(-slope)
