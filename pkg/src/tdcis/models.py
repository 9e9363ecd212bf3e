"""Assembly of complete model atoms (grid, potential, orbitals, CIS tables)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .cis import CISBasis, CouplingMode, build_coulomb_table, build_dipole_table
from .errors import ConfigurationError
from .grid import build_grid, solve_orbitals
from .hamiltonian import CISHamiltonian
from .potential import bare_coulomb, hfs_scf, soft_core

log = logging.getLogger(__name__)


@dataclass(eq=False)
class AtomModel:
    grid: object
    potential: object
    occupied: list
    virtuals: object
    basis: CISBasis
    dipole: object
    coulomb: object

    @property
    def ionization_potential(self):
        """Binding energy of the least bound active hole (hartree)."""
        return -max(ch.energy for ch in self.basis.channels)

    def hamiltonian(self, gauge="velocity", cap=None, backend="auto"):
        return CISHamiltonian(self.basis, self.dipole, self.coulomb, cap=cap, gauge=gauge, backend=backend)


def make_potential(grid, kind, Z=1.0, n_elec=2, depth=None, width=None, mixing=0.3, tol=1e-8):
    if kind == "bare-coulomb":
        return bare_coulomb(grid, Z, n_elec)
    if kind == "soft-core":
        if depth is None or width is None:
            raise ConfigurationError("soft-core potential needs depth and width")
        return soft_core(grid, depth, width, n_elec)
    if kind == "hfs":
        return hfs_scf(grid, Z, n_elec, mixing=mixing, tol=tol)
    raise ConfigurationError(f"unknown potential kind {kind!r}")


def build_model(
    r_max,
    n_points,
    mapping="uniform",
    potential="soft-core",
    Z=1.0,
    n_elec=2,
    depth=None,
    width=None,
    l_max=3,
    e_cut=4.0,
    active=None,
    coupling="mean-field-only",
    closed_shell=True,
    l_multipole_max=None,
):
    """Build every ingredient of a propagation-ready model atom.

    Parameters mirror the ``[grid]`` and ``[atom]`` configuration sections;
    energies are in hartree and lengths in bohr.
    """
    grid = build_grid(r_max, n_points, mapping)
    pot = make_potential(grid, potential, Z=Z, n_elec=n_elec, depth=depth, width=width)
    occupied, virtuals = solve_orbitals(grid, pot, l_max, e_cut)
    basis = CISBasis(grid, occupied, virtuals, active=active, closed_shell=closed_shell)
    dipole = build_dipole_table(basis)
    mode = CouplingMode(coupling)
    coulomb = build_coulomb_table(basis, mode, l_multipole_max)
    log.info("model: %d channels, CIS dimension %d", basis.n_channels, basis.dim)
    return AtomModel(grid, pot, occupied, virtuals, basis, dipole, coulomb)
