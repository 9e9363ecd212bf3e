"""Radial grids and the field-free single-particle eigenproblem.

Radial functions are stored as u(r) = r R(r) sampled on nodes r_1 < ... < r_n
with r_n = r_max.  The origin is never a node and u(r_max) = 0 is imposed, so
the finite-difference unknowns are the interior nodes 1..n-1.

The kinetic energy is discretised in its symmetric (variational) form
1/2 sum_k (u_{k+1} - u_k)^2 / h_k with the quadrature weights as mass matrix,
which keeps the generalized eigenproblem symmetric on any node distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ConfigurationError, NumericalError

L_LETTERS = "spdfghiklmnoqrtuv"

# Gregory end corrections (third order) for the trapezoid rule in the
# mapping coordinate.
_GREGORY = np.array([3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0])

# Bisection tolerance.  The default (eps * ||T||) is absolute and, on mapped
# grids whose first node sits very close to the origin, ||T|| reaches 1e12
# or more; bisecting to the underflow limit keeps the low eigenvalues at
# full relative precision.
_BISECT_TOL = 1e-300


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Radial nodes and quadrature weights.

    Attributes
    ----------
    r_max : float
        Outer boundary in bohr; also the last node.
    n_points : int
        Number of nodes.
    mapping : str
        ``"uniform"`` or ``"sqrt-mapped"``.
    r : ndarray
        Node positions, strictly increasing in (0, r_max].
    w : ndarray
        Positive quadrature weights; ``w.sum() == r_max``.
    """

    r_max: float
    n_points: int
    mapping: str
    r: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    @property
    def spacing(self):
        """Interval lengths h_k = r_{k+1} - r_k, starting with r_1 - 0."""
        return np.diff(self.r, prepend=0.0)

    def integrate(self, values, axis=0):
        return np.tensordot(self.w, values, axes=([0], [axis]))

    def inner(self, f, g):
        """Weighted inner product sum_k w_k conj(f_k) g_k."""
        return np.sum(self.w * np.conj(f) * g)


def build_grid(r_max, n_points, mapping="uniform"):
    """Construct a radial grid.

    ``uniform`` places nodes at k r_max / n.  ``sqrt-mapped`` places them at
    x_k^2 with x uniform in (0, sqrt(r_max)], which concentrates nodes near
    the nucleus.  Weights of the mapped grid integrate smooth functions to
    fourth order.
    """
    if not r_max > 0:
        raise ConfigurationError(f"r_max must be positive, got {r_max!r}")
    if int(n_points) != n_points or n_points < 16:
        raise ConfigurationError(f"n_points must be an integer >= 16, got {n_points!r}")
    n = int(n_points)
    k = np.arange(1, n + 1, dtype=float)
    if mapping == "uniform":
        h = r_max / n
        r = k * h
        w = np.full(n, h)
    elif mapping == "sqrt-mapped":
        dx = np.sqrt(r_max) / n
        x = k * dx
        r = x**2
        corr = np.ones(n + 1)
        corr[:3] = _GREGORY
        corr[-3:] = _GREGORY[::-1]
        # node x_0 = 0 carries zero integrand because dr/dx = 2x vanishes there
        w = dx * 2.0 * x * corr[1:]
        r[-1] = r_max
    else:
        raise ConfigurationError(f"unknown grid mapping {mapping!r}")
    return RadialGrid(float(r_max), n, mapping, r, w)


@dataclass(eq=False)
class Orbital:
    """A bound or discretised-continuum spin-free orbital u(r)/r Y_lm."""

    label: str
    l: int
    m: int
    energy: float
    u: np.ndarray = field(repr=False)
    occupied: bool = False
    n: int | None = None

    def __post_init__(self):
        if self.l < 0 or abs(self.m) > self.l:
            raise ConfigurationError(f"invalid (l, m) = ({self.l}, {self.m})")

    def with_m(self, m, label=None):
        return replace(self, m=m, label=label or self.label)


@dataclass(eq=False)
class VirtualSpace:
    """Unoccupied orbitals below an energy cut-off, grouped by l.

    Each l block holds one radial function per energy; the m quantum number
    is assigned when the function is paired with a hole.
    """

    e_cut: float
    l_max: int
    orbitals: dict[int, list[Orbital]]

    def energies(self, l):
        return np.array([o.energy for o in self.orbitals.get(l, [])])

    def radial(self, l):
        """Matrix of radial functions, one column per orbital of angular momentum l."""
        orbs = self.orbitals.get(l, [])
        if not orbs:
            return np.zeros((0, 0))
        return np.column_stack([o.u for o in orbs])

    def size(self, l):
        return len(self.orbitals.get(l, []))

    def __len__(self):
        return sum(len(v) for v in self.orbitals.values())


def radial_hamiltonian(grid, potential_values, l):
    """Diagonal and off-diagonal of the symmetrised radial FD Hamiltonian.

    Returned for the interior nodes 1..n-1; eigenvectors v relate to radial
    samples through u = v / sqrt(w).
    """
    r = grid.r[:-1]
    w = grid.w[:-1]
    h = grid.spacing
    h_left = h[:-1]
    h_right = h[1:]
    v = np.asarray(potential_values, dtype=float)[:-1]
    diag = 0.5 * (1.0 / h_left + 1.0 / h_right) / w + v + l * (l + 1) / (2.0 * r**2)
    off = -0.5 / (h_right[:-1] * np.sqrt(w[:-1] * w[1:]))
    return diag, off


def radial_eigensystem(grid, potential_values, l, e_max=None, count=None):
    """Lowest eigenpairs of the radial Hamiltonian for one l.

    Either ``count`` (number of lowest states) or ``e_max`` (energy ceiling)
    selects the states; with neither, the full spectrum is returned.
    Radial functions are normalised in the grid's weighted inner product and
    returned on all n nodes (zero at r_max), sign-fixed positive near r = 0.
    """
    diag, off = radial_hamiltonian(grid, potential_values, l)
    try:
        if count is not None:
            count = min(int(count), diag.size)
            if count == 0:
                return np.zeros(0), np.zeros((grid.n_points, 0))
            e, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1), tol=_BISECT_TOL)
        elif e_max is not None:
            lower = float(np.min(diag) - 2.0 * np.max(np.abs(off)) - 1.0)
            if e_max <= lower:
                return np.zeros(0), np.zeros((grid.n_points, 0))
            e, v = eigh_tridiagonal(diag, off, select="v", select_range=(lower, e_max), tol=_BISECT_TOL)
        else:
            e, v = eigh_tridiagonal(diag, off)
    except LinAlgError as exc:
        raise NumericalError(f"radial eigensolver failed for l={l}: {exc}", l=l) from exc
    if not np.all(np.isfinite(e)):
        raise NumericalError(f"non-finite eigenvalues for l={l}", l=l)
    u = np.zeros((grid.n_points, e.size))
    u[:-1] = v / np.sqrt(grid.w[:-1])[:, None]
    # deterministic sign: first non-negligible lobe positive
    for j in range(e.size):
        col = u[:, j]
        idx = np.argmax(np.abs(col) > 1e-3 * np.max(np.abs(col)))
        if col[idx] < 0:
            u[:, j] = -col
    return e, u


def madelung_order(max_n=8):
    """Subshells (n, l) in the order n + l, then n."""
    shells = [(n, l) for n in range(1, max_n + 1) for l in range(n)]
    return sorted(shells, key=lambda s: (s[0] + s[1], s[0]))


def aufbau(n_elec):
    """Closed subshells filled by ``n_elec`` electrons, as (n, l) pairs."""
    if n_elec <= 0 or n_elec % 2:
        raise ConfigurationError(f"closed-shell filling needs a positive even electron count, got {n_elec}")
    left = n_elec
    filled = []
    for n, l in madelung_order():
        if left == 0:
            break
        cap = 2 * (2 * l + 1)
        if left < cap:
            raise ConfigurationError(
                f"{n_elec} electrons leave the {n}{L_LETTERS[l]} subshell partially filled"
            )
        filled.append((n, l))
        left -= cap
    return filled


def orbital_label(n, l, m=None):
    base = f"{n}{L_LETTERS[l]}"
    if l == 0 or m is None:
        return base
    return f"{base}{m:+d}" if m else f"{base}0"


def solve_orbitals(grid, potential, l_max, e_cut, n_elec=None):
    """Occupied orbitals and the virtual space of a central potential.

    Parameters
    ----------
    grid : RadialGrid
    potential : RadialPotential
        Supplies ``values`` on the grid and, unless ``n_elec`` is given,
        the electron count used for aufbau filling.
    l_max : int
        Highest angular momentum of the virtual space.
    e_cut : float
        Energy cut-off (hartree) for virtual orbitals.

    Returns
    -------
    occupied : list of Orbital
        One entry per (n, l, m), lowest subshells first.
    virtuals : VirtualSpace
    """
    if l_max < 0:
        raise ConfigurationError("l_max must be >= 0")
    n_elec = potential.n_elec if n_elec is None else n_elec
    shells = aufbau(n_elec)
    n_occ_per_l = {}
    for n, l in shells:
        n_occ_per_l[l] = n_occ_per_l.get(l, 0) + 1

    occupied = []
    virt = {}
    for l in range(max(l_max, max(n_occ_per_l)) + 1):
        n_occ = n_occ_per_l.get(l, 0)
        e_occ, u_occ = radial_eigensystem(grid, potential.values, l, count=n_occ)
        if n_occ and e_occ.size < n_occ:
            raise NumericalError(f"only {e_occ.size} states found for l={l}", l=l)
        for k in range(n_occ):
            n = k + l + 1
            for m in range(-l, l + 1):
                occupied.append(Orbital(orbital_label(n, l, m), l, m, float(e_occ[k]), u_occ[:, k], True, n))
        if l > l_max:
            continue
        e, u = radial_eigensystem(grid, potential.values, l, e_max=e_cut)
        virt[l] = [
            Orbital(f"v{l}.{k}", l, 0, float(e[k]), u[:, k], False, k + l + 1)
            for k in range(n_occ, e.size)
        ]
    occupied.sort(key=lambda o: (madelung_order().index((o.n, o.l)), o.m))
    return occupied, VirtualSpace(float(e_cut), int(l_max), virt)


def write_orbitals(path, grid, orbitals):
    """Write orbitals as delimited text.

    Each orbital is a header line ``# orbital label=.. l=.. m=.. energy=..
    occupied=0|1`` followed by ``r Re(u) Im(u)`` rows, separated by blank lines.
    """
    with open(path, "w") as fh:
        fh.write(f"# grid r_max={grid.r_max!r} n_points={grid.n_points} mapping={grid.mapping}\n")
        for orb in orbitals:
            fh.write(
                f"# orbital label={orb.label} l={orb.l} m={orb.m} "
                f"energy={orb.energy!r} occupied={int(orb.occupied)} n={orb.n}\n"
            )
            u = np.asarray(orb.u, dtype=complex)
            for rk, uk in zip(grid.r, u):
                fh.write(f"{rk:.17g} {uk.real:.17g} {uk.imag:.17g}\n")
            fh.write("\n")


def read_orbitals(path):
    """Inverse of :func:`write_orbitals`; returns ``(r, orbitals)``."""
    orbitals = []
    header = None
    rows = []
    r = None

    def flush():
        nonlocal header, rows, r
        if header is None:
            return
        data = np.array(rows, dtype=float).reshape(-1, 3)
        r = data[:, 0]
        u = data[:, 1] + 1j * data[:, 2]
        if not np.any(data[:, 2]):
            u = data[:, 1].copy()
        n = header.get("n")
        orbitals.append(
            Orbital(
                header["label"], int(header["l"]), int(header["m"]), float(header["energy"]), u,
                header["occupied"] == "1", None if n in (None, "None") else int(n),
            )
        )
        header, rows = None, []

    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# orbital"):
                flush()
                header = dict(tok.split("=", 1) for tok in line[len("# orbital"):].split())
            elif line.startswith("#") or not line:
                continue
            else:
                rows.append([float(x) for x in line.split()])
    flush()
    return r, orbitals
