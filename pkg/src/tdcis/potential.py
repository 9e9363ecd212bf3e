"""Central mean-field potentials and the complex absorbing potential."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigurationError, NumericalError
from .grid import aufbau, radial_eigensystem

log = logging.getLogger(__name__)

POTENTIAL_KINDS = ("bare-coulomb", "soft-core", "hfs", "tabulated")

_RHO_FLOOR = 1e-30


@dataclass(eq=False)
class RadialPotential:
    """A local central potential V(r) sampled on a radial grid."""

    kind: str
    Z: float
    n_elec: int
    grid: object = field(repr=False)
    values: np.ndarray = field(repr=False)
    info: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.r.shape:
            raise ConfigurationError("potential samples do not match the grid")

    @property
    def z_eff(self):
        """Charge seen far outside the neutral-atom core, Z - N_elec."""
        return self.Z - self.n_elec


def bare_coulomb(grid, Z=1.0, n_elec=2):
    """-Z/r.  ``n_elec`` only sets the aufbau filling of the model."""
    return RadialPotential("bare-coulomb", float(Z), int(n_elec), grid, -Z / grid.r)


def soft_core(grid, depth, width, n_elec=2):
    """Gaussian well V(r) = depth * exp(-r^2 / width^2)."""
    if not depth < 0:
        raise ConfigurationError(f"soft-core depth must be negative, got {depth!r}")
    if not width > 0:
        raise ConfigurationError(f"soft-core width must be positive, got {width!r}")
    values = depth * np.exp(-((grid.r / width) ** 2))
    return RadialPotential(
        "soft-core", 0.0, int(n_elec), grid, values, {"depth": float(depth), "width": float(width)}
    )


def tabulated(grid, values, Z=0.0, n_elec=2):
    return RadialPotential("tabulated", float(Z), int(n_elec), grid, np.array(values, dtype=float))


def hartree_potential(grid, radial_density):
    """Electrostatic potential of a spherical charge with radial density sigma(r).

    ``radial_density`` is sigma = 4 pi r^2 rho, so that its integral is the
    electron count.
    """
    r = np.concatenate([[0.0], grid.r])
    sigma = np.concatenate([[0.0], radial_density])
    inner = cumulative_trapezoid(sigma, r, initial=0.0)[1:]
    outer_integrand = np.concatenate([[0.0], radial_density / grid.r])
    # first integrand sample: sigma/r -> 0 because sigma ~ r^2 at the origin
    outer_cum = cumulative_trapezoid(outer_integrand, r, initial=0.0)[1:]
    outer = outer_cum[-1] - outer_cum
    return inner / grid.r + outer


def slater_exchange(rho):
    """Local exchange -(3/2) (3 rho / pi)^(1/3)."""
    rho = np.maximum(rho, _RHO_FLOOR)
    return -1.5 * np.cbrt(3.0 * rho / np.pi)


def latter_tail(grid, raw, Z, n_elec):
    """Apply the Latter correction: V = min(V_raw, -(Z - N + 1)/r)."""
    tail = -(Z - n_elec + 1.0) / grid.r
    return np.minimum(raw, tail)


def latter_crossover(grid, raw, Z, n_elec):
    """Smallest radius beyond which the tail branch is selected, or None."""
    tail = -(Z - n_elec + 1.0) / grid.r
    use_tail = raw > tail
    if not use_tail[-1]:
        return None
    # last node where the raw branch was still selected
    keep = np.nonzero(~use_tail)[0]
    if keep.size == 0:
        return float(grid.r[0])
    k = keep[-1]
    # linear interpolation of the branch difference between nodes k and k+1
    d0 = raw[k] - tail[k]
    d1 = raw[k + 1] - tail[k + 1]
    return float(grid.r[k] + (grid.r[k + 1] - grid.r[k]) * (-d0) / (d1 - d0))


def _occupied_density(grid, values, shells):
    """Radial density and subshell energies for closed-shell filling."""
    sigma = np.zeros(grid.n_points)
    energies = []
    by_l = {}
    for n, l in shells:
        by_l.setdefault(l, []).append(n)
    for l, ns in sorted(by_l.items()):
        e, u = radial_eigensystem(grid, values, l, count=len(ns))
        if e.size < len(ns):
            raise NumericalError(f"missing bound states for l={l}", l=l)
        for k in range(len(ns)):
            sigma += 2 * (2 * l + 1) * u[:, k] ** 2
            energies.append(e[k])
    return sigma, np.array(energies)


def hfs_potential_from_density(grid, Z, n_elec, sigma):
    """Hartree-Fock-Slater potential with Latter tail for a radial density."""
    rho = sigma / (4.0 * np.pi * grid.r**2)
    raw = -Z / grid.r + hartree_potential(grid, sigma) + slater_exchange(rho)
    return latter_tail(grid, raw, Z, n_elec), raw


def hfs_scf(grid, Z, n_elec, mixing=0.3, tol=1e-6, max_iter=200):
    """Self-consistent Hartree-Fock-Slater potential for a closed-shell atom.

    The density is mixed linearly, rho <- (1 - mixing) rho + mixing rho_new,
    until the largest change of an occupied orbital energy drops below
    ``tol``.

    Raises
    ------
    NumericalError
        If the iteration cap is reached; ``details["history"]`` holds the
        per-iteration residuals.
    """
    if not 0 < mixing <= 1:
        raise ConfigurationError(f"mixing must lie in (0, 1], got {mixing!r}")
    shells = aufbau(n_elec)
    values = -Z / grid.r
    sigma, energies = _occupied_density(grid, values, shells)
    history = []
    for it in range(1, max_iter + 1):
        values, raw = hfs_potential_from_density(grid, Z, n_elec, sigma)
        new_sigma, new_energies = _occupied_density(grid, values, shells)
        resid = float(np.max(np.abs(new_energies - energies)))
        history.append(resid)
        log.debug("hfs iteration %d residual %.3e", it, resid)
        energies = new_energies
        if resid < tol:
            sigma = new_sigma
            values, raw = hfs_potential_from_density(grid, Z, n_elec, sigma)
            info = {
                "iterations": it,
                "history": history,
                "orbital_energies": energies,
                "density": sigma,
                "raw": raw,
                "crossover": latter_crossover(grid, raw, Z, n_elec),
            }
            return RadialPotential("hfs", float(Z), int(n_elec), grid, values, info)
        sigma = (1.0 - mixing) * sigma + mixing * new_sigma
    raise NumericalError(
        f"HFS SCF did not converge in {max_iter} iterations (last residual {history[-1]:.3e})",
        history=history,
    )


@dataclass(frozen=True)
class AbsorbingPotential:
    """Quadratic absorber -i eta (r - r_cap)^2 for r > r_cap."""

    r_cap: float
    eta: float

    def __post_init__(self):
        if self.eta < 0:
            raise ConfigurationError("CAP strength must be non-negative")

    def strength(self, r):
        """Real profile W(r) >= 0 such that the potential is -i W(r)."""
        r = np.asarray(r, dtype=float)
        return self.eta * np.where(r > self.r_cap, (r - self.r_cap) ** 2, 0.0)

    def __call__(self, r):
        return -1j * self.strength(r)


def cap_value(cap, r):
    """Complex CAP value at radius r."""
    if np.any(np.asarray(r) < 0):
        raise ConfigurationError("radius must be non-negative")
    return cap(r)


def write_potential(path, potential):
    grid = potential.grid
    with open(path, "w") as fh:
        fh.write(
            f"# potential kind={potential.kind} Z={potential.Z!r} n_elec={potential.n_elec} "
            f"r_max={grid.r_max!r} n_points={grid.n_points} mapping={grid.mapping}\n"
        )
        for rk, vk in zip(grid.r, potential.values):
            fh.write(f"{rk:.17g} {vk:.17g}\n")


def read_potential(path, grid=None):
    """Read a potential file as a ``tabulated`` potential.

    The grid is rebuilt from the header unless one is supplied.
    """
    from .grid import build_grid

    with open(path) as fh:
        header = fh.readline()
        meta = dict(tok.split("=", 1) for tok in header[len("# potential"):].split())
        data = np.loadtxt(fh, ndmin=2)
    if grid is None:
        grid = build_grid(float(meta["r_max"]), int(meta["n_points"]), meta["mapping"])
    if data.shape[0] != grid.n_points:
        raise ConfigurationError("potential file does not match the grid")
    return RadialPotential("tabulated", float(meta["Z"]), int(meta["n_elec"]), grid, data[:, 1])
