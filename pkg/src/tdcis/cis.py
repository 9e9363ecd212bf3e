"""Particle-hole (CIS) state space, matrix elements and equations of motion.

Amplitudes are kept in one flat complex vector: the reference amplitude
alpha_0 first, then one contiguous block per (channel, l_a) holding
alpha_i^a for all virtual radial functions of angular momentum l_a.  Only
the sector reached by linearly polarised light from the ground state is
represented, i.e. the excited electron carries the magnetic quantum number
of its hole (m_a = m_i).

Radial functions are real, so all radial integrals are real; the velocity
form dipole p_z = -i d/dz is purely imaginary in this basis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, NumericalError


class CouplingMode(str, enum.Enum):
    INTRACHANNEL = "intrachannel"
    INTERCHANNEL = "interchannel"
    MEAN_FIELD = "mean-field-only"


@dataclass(frozen=True)
class ChannelIndex:
    """An active hole: its position in the channel list and its orbital."""

    index: int
    orbital: object = field(compare=False)

    @property
    def label(self):
        return self.orbital.label

    @property
    def l(self):
        return self.orbital.l

    @property
    def m(self):
        return self.orbital.m

    @property
    def energy(self):
        return self.orbital.energy


def _select_channels(occupied, active):
    if active is None:
        return list(occupied)
    chosen = []
    for key in active:
        hits = [o for o in occupied if o.label == key]
        if not hits:
            # subshell name such as "3p" selects every m
            hits = [o for o in occupied if f"{o.n}{'spdfghik'[o.l]}" == key]
        if not hits:
            raise ConfigurationError(f"no occupied orbital matches active channel {key!r}")
        chosen.extend(h for h in hits if h not in chosen)
    return chosen


class CISBasis:
    """Layout of the CIS amplitude vector.

    Parameters
    ----------
    grid : RadialGrid
    occupied : list of Orbital
    virtuals : VirtualSpace
    active : list of str, optional
        Orbital labels ("3p0") or subshell names ("3p") of the active holes.
        All occupied orbitals are active by default; the others stay frozen.
    closed_shell : bool
        True for singlet-adapted particle-hole states of a closed-shell
        atom (reference coupling factor sqrt(2)); False treats the model as
        a single active electron (factor 1).
    """

    def __init__(self, grid, occupied, virtuals, active=None, closed_shell=True):
        self.grid = grid
        self.occupied = list(occupied)
        self.virtuals = virtuals
        self.closed_shell = bool(closed_shell)
        self.ground_factor = np.sqrt(2.0) if closed_shell else 1.0
        self.channels = [ChannelIndex(k, o) for k, o in enumerate(_select_channels(occupied, active))]
        if not self.channels:
            raise ConfigurationError("at least one active channel is required")
        self._slices = {}
        offset = 1
        for ch in self.channels:
            for l in range(abs(ch.m), virtuals.l_max + 1):
                n = virtuals.size(l)
                if n == 0:
                    continue
                self._slices[(ch.index, l)] = slice(offset, offset + n)
                offset += n
        self.dim = offset
        self._radial = {l: virtuals.radial(l) for l in range(virtuals.l_max + 1)}
        self._energies = {l: virtuals.energies(l) for l in range(virtuals.l_max + 1)}

    @property
    def n_channels(self):
        return len(self.channels)

    def blocks(self):
        """Iterate over ((channel, l), slice) pairs in storage order."""
        return self._slices.items()

    def block(self, channel, l):
        return self._slices.get((int(channel), int(l)))

    def channel_blocks(self, channel):
        return [(l, s) for (c, l), s in self._slices.items() if c == channel]

    def radial(self, l):
        return self._radial[l]

    def energies(self, l):
        return self._energies[l]

    def excitation_energies(self):
        """Diagonal eps_a - eps_i for every amplitude; 0 for the reference."""
        diag = np.zeros(self.dim)
        for (c, l), s in self._slices.items():
            diag[s] = self._energies[l] - self.channels[c].energy
        return diag

    def zeros(self):
        return CISState(self, np.zeros(self.dim, dtype=complex))

    def ground(self):
        state = self.zeros()
        state.vector[0] = 1.0
        return state


@dataclass(eq=False)
class CISState:
    """Reference amplitude plus particle-hole amplitudes on a CISBasis."""

    basis: CISBasis
    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=complex)
        if self.vector.shape != (self.basis.dim,):
            raise ConfigurationError("state vector does not match the basis dimension")

    @property
    def alpha0(self):
        return self.vector[0]

    def amplitudes(self, channel, l):
        s = self.basis.block(channel, l)
        if s is None:
            return np.zeros(0, dtype=complex)
        return self.vector[s]

    def norm(self):
        return float(np.vdot(self.vector, self.vector).real)

    def channel_population(self, channel):
        return float(
            sum(np.vdot(self.vector[s], self.vector[s]).real for _, s in self.basis.channel_blocks(channel))
        )

    def copy(self):
        return CISState(self.basis, self.vector.copy())


# ---------------------------------------------------------------------------
# angular algebra


def dipole_angular(l_upper, m):
    """<l_upper, m| cos(theta) |l_upper - 1, m> for spherical harmonics."""
    l = l_upper
    if abs(m) >= l:
        return 0.0
    return float(np.sqrt((l * l - m * m) / ((2 * l - 1) * (2 * l + 1))))


@lru_cache(maxsize=None)
def gaunt(l1, m1, l2, m2, l3, m3):
    """Integral of Y_l1m1 Y_l2m2 Y_l3m3 over the unit sphere."""
    if m1 + m2 + m3 != 0 or (l1 + l2 + l3) % 2:
        return 0.0
    if not abs(l1 - l2) <= l3 <= l1 + l2:
        return 0.0
    from sympy.physics.wigner import gaunt as _gaunt

    return float(_gaunt(l1, l2, l3, m1, m2, m3))


def coulomb_angular(L, lp, mp, lq, mq, lr, mr, ls, ms):
    """Angular factor of multipole L in v_pqrs = sum_L ang_L R^L_pqrs."""
    M = mp - mr
    if ms - mq != M or abs(M) > L:
        return 0.0
    a = (-1) ** (mp % 2) * gaunt(lp, -mp, L, M, lr, mr)
    if a == 0.0:
        return 0.0
    b = (-1) ** ((mq + M) % 2) * gaunt(lq, -mq, L, -M, ls, ms)
    return 4.0 * np.pi / (2 * L + 1) * a * b


# ---------------------------------------------------------------------------
# radial integrals


def multipole_potential(grid, density, L):
    """Y^L(r_k) = sum_j w_j density_j r_<^L / r_>^(L+1) for each column.

    ``density`` may be 1-D or 2-D with the radial index first.
    """
    r = grid.r
    f = grid.w.reshape((-1,) + (1,) * (np.ndim(density) - 1)) * density
    rr = r.reshape((-1,) + (1,) * (np.ndim(density) - 1))
    inner = np.cumsum(f * rr**L, axis=0)
    tail = f * rr ** (-L - 1)
    outer = np.cumsum(tail[::-1], axis=0)[::-1] - tail
    return inner / rr ** (L + 1) + rr**L * outer


def radial_derivative_integral(grid, u_upper, u_lower, l_lower):
    """<u_upper| d/dr - (l_lower + 1)/r |u_lower> with an antisymmetric difference.

    Works on 1-D functions or matrices of column functions.
    """
    lo = np.atleast_2d(np.asarray(u_lower).T).T if np.ndim(u_lower) == 1 else u_lower
    up = np.atleast_2d(np.asarray(u_upper).T).T if np.ndim(u_upper) == 1 else u_upper
    shifted = np.zeros_like(lo)
    shifted[:-1] += lo[1:]
    shifted[1:] -= lo[:-1]
    val = 0.5 * up.T @ shifted - (l_lower + 1) * (up * (grid.w / grid.r)[:, None]).T @ lo
    if np.ndim(u_lower) == 1 and np.ndim(u_upper) == 1:
        return float(val[0, 0])
    if np.ndim(u_lower) == 1:
        return val[:, 0]
    if np.ndim(u_upper) == 1:
        return val[0]
    return val


def radial_r_integral(grid, u_upper, u_lower):
    up = u_upper if np.ndim(u_upper) > 1 else np.asarray(u_upper)[:, None]
    lo = u_lower if np.ndim(u_lower) > 1 else np.asarray(u_lower)[:, None]
    val = (up * (grid.w * grid.r)[:, None]).T @ lo
    if np.ndim(u_lower) == 1 and np.ndim(u_upper) == 1:
        return float(val[0, 0])
    if np.ndim(u_lower) == 1:
        return val[:, 0]
    if np.ndim(u_upper) == 1:
        return val[0]
    return val


def dipole_element(grid, a, b, gauge="velocity"):
    """<a| p_z |b> (velocity) or <a| z |b> (length) between two orbitals."""
    if a.m != b.m or abs(a.l - b.l) != 1:
        return 0.0
    if a.l == b.l + 1:
        c = dipole_angular(a.l, a.m)
        if gauge == "velocity":
            return -1j * c * radial_derivative_integral(grid, np.real(a.u), np.real(b.u), b.l)
        return c * radial_r_integral(grid, np.real(a.u), np.real(b.u))
    return np.conj(dipole_element(grid, b, a, gauge))


def coulomb_element(grid, p, q, r, s, l_multipole_max=None):
    """Two-body integral v_pqrs via the multipole expansion of 1/|r - r'|."""
    lmax = l_multipole_max if l_multipole_max is not None else min(p.l + r.l, q.l + s.l)
    total = 0.0
    for L in range(0, lmax + 1):
        ang = coulomb_angular(L, p.l, p.m, q.l, q.m, r.l, r.m, s.l, s.m)
        if ang == 0.0:
            continue
        y = multipole_potential(grid, np.real(q.u) * np.real(s.u), L)
        total += ang * grid.integrate(np.real(p.u) * np.real(r.u) * y)
    return total


# ---------------------------------------------------------------------------
# tables


class DipoleTable:
    """Velocity- and length-form dipole elements needed by a CISBasis.

    Attributes
    ----------
    radial_p, radial_z : dict l -> ndarray
        Real radial integrals between virtual blocks l + 1 (rows) and l.
    hole_p, hole_z : dict (channel, l_a) -> ndarray
        p_{a i} and z_{a i} for virtual a of angular momentum l_a.
    hole_hole_p, hole_hole_z : ndarray
        p_{i i'} and z_{i i'} among active holes.
    """

    def __init__(self, basis):
        self.basis = basis
        grid = basis.grid
        lmax = basis.virtuals.l_max
        self.radial_p = {}
        self.radial_z = {}
        for l in range(lmax):
            lo, up = basis.radial(l), basis.radial(l + 1)
            if lo.size == 0 or up.size == 0:
                continue
            self.radial_p[l] = radial_derivative_integral(grid, up, lo, l)
            self.radial_z[l] = radial_r_integral(grid, up, lo)
        self.hole_p = {}
        self.hole_z = {}
        for ch in basis.channels:
            u_i = np.real(ch.orbital.u)
            for la in (ch.l - 1, ch.l + 1):
                if basis.block(ch.index, la) is None:
                    continue
                ua = basis.radial(la)
                if la == ch.l + 1:
                    c = dipole_angular(la, ch.m)
                    self.hole_p[(ch.index, la)] = -1j * c * radial_derivative_integral(grid, ua, u_i, ch.l)
                    self.hole_z[(ch.index, la)] = c * radial_r_integral(grid, ua, u_i)
                else:
                    c = dipole_angular(ch.l, ch.m)
                    self.hole_p[(ch.index, la)] = 1j * c * radial_derivative_integral(grid, u_i, ua, la)
                    self.hole_z[(ch.index, la)] = c * radial_r_integral(grid, u_i, ua)
        nc = basis.n_channels
        self.hole_hole_p = np.zeros((nc, nc), dtype=complex)
        self.hole_hole_z = np.zeros((nc, nc))
        for a in basis.channels:
            for b in basis.channels:
                self.hole_hole_p[a.index, b.index] = dipole_element(grid, a.orbital, b.orbital, "velocity")
                self.hole_hole_z[a.index, b.index] = np.real(dipole_element(grid, a.orbital, b.orbital, "length"))

    def virtual_block(self, la, lb, m, gauge="velocity"):
        """Matrix <a|O|b> for virtual blocks la, lb at magnetic number m, or None."""
        if la == lb + 1:
            rad = (self.radial_p if gauge == "velocity" else self.radial_z).get(lb)
            c = dipole_angular(la, m)
            if rad is None or c == 0.0:
                return None
            return -1j * c * rad if gauge == "velocity" else c * rad
        if lb == la + 1:
            blk = self.virtual_block(lb, la, m, gauge)
            return None if blk is None else blk.conj().T
        return None


class CoulombTable:
    """Particle-hole Coulomb blocks 2 v_{a i' i b} - v_{a i' b i}.

    ``blocks[(c, c2, la, lb)]`` maps amplitudes of channel c2 / virtual
    block lb onto the time derivative of channel c / block la.
    """

    def __init__(self, basis, mode, l_multipole_max, blocks):
        self.basis = basis
        self.mode = CouplingMode(mode)
        self.l_multipole_max = l_multipole_max
        self.blocks = blocks

    def __len__(self):
        return len(self.blocks)


def minimum_multipole(basis):
    """Smallest truncation that keeps every exchange-type multipole: 2 l_hole."""
    return 2 * max(ch.l for ch in basis.channels)


def build_coulomb_table(basis, mode=CouplingMode.INTERCHANNEL, l_multipole_max=None):
    """Assemble the Coulomb blocks of the CIS equations of motion.

    Parameters
    ----------
    basis : CISBasis
    mode : CouplingMode
        ``mean-field-only`` returns an empty table; ``intrachannel`` keeps
        only blocks diagonal in the hole index.
    l_multipole_max : int, optional
        Multipole truncation.  Defaults to l_max(virtual) + l_max(hole),
        which is exact.  Values below 2 l_max(hole) are rejected.
    """
    mode = CouplingMode(mode)
    lmin_req = minimum_multipole(basis)
    lmax_virt = basis.virtuals.l_max
    if l_multipole_max is None:
        l_multipole_max = lmax_virt + max(ch.l for ch in basis.channels)
    if l_multipole_max < lmin_req:
        raise ConfigurationError(
            f"multipole truncation {l_multipole_max} is below the required {lmin_req}"
        )
    blocks = {}
    if mode is CouplingMode.MEAN_FIELD:
        return CoulombTable(basis, mode, l_multipole_max, blocks)
    grid = basis.grid
    w = grid.w
    for ch2 in basis.channels:
        u2 = np.real(ch2.orbital.u)
        for lb, sb in basis.channel_blocks(ch2.index):
            Ub = basis.radial(lb)
            for ch in basis.channels:
                if mode is CouplingMode.INTRACHANNEL and ch.index != ch2.index:
                    continue
                u1 = np.real(ch.orbital.u)
                for la, sa in basis.channel_blocks(ch.index):
                    Ua = basis.radial(la)
                    blk = np.zeros((Ua.shape[1], Ub.shape[1]))
                    for L in range(l_multipole_max + 1):
                        # direct: densities (a, i) and (i', b)
                        ang = coulomb_angular(L, la, ch.m, ch2.l, ch2.m, ch.l, ch.m, lb, ch2.m)
                        if ang:
                            y = multipole_potential(grid, u2[:, None] * Ub, L)
                            blk += 2.0 * ang * ((Ua * (w * u1)[:, None]).T @ y)
                        # exchange: densities (a, b) and (i', i)
                        ang = coulomb_angular(L, la, ch.m, ch2.l, ch2.m, lb, ch2.m, ch.l, ch.m)
                        if ang:
                            y = multipole_potential(grid, u2 * u1, L)
                            blk -= ang * ((Ua * (w * y)[:, None]).T @ Ub)
                    if np.any(blk):
                        blocks[(ch.index, ch2.index, la, lb)] = blk
    return CoulombTable(basis, mode, l_multipole_max, blocks)


def build_dipole_table(basis):
    return DipoleTable(basis)


# ---------------------------------------------------------------------------
# equations of motion


def _check_tables(state, dipole, coulomb):
    if dipole.basis is not state.basis or (coulomb is not None and coulomb.basis is not state.basis):
        raise ValueError("tables were built for a different CIS basis")


def eom_rhs(state, A_t, dipole, coulomb=None, mode=None):
    """Time derivative of the CIS amplitudes in velocity form.

    Evaluates, for linear polarisation along z,

        i d(alpha_0)/dt   = g A sum_{i,a} p_{ia} alpha_i^a
        i d(alpha_i^a)/dt = (e_a - e_i) alpha_i^a
                            + sum_{i',b} (2 v_{ai'ib} - v_{ai'bi}) alpha_{i'}^b
                            + g A alpha_0 p_{ai}
                            + A [sum_b p_{ab} alpha_i^b - sum_{i'} p_{i'i} alpha_{i'}^a]

    with g = sqrt(2) for a closed shell (1 for a single active electron),
    and returns d(state)/dt as a new CISState.  ``mode`` can further
    restrict the Coulomb blocks used.
    """
    _check_tables(state, dipole, coulomb)
    basis = state.basis
    x = state.vector
    out = np.zeros_like(x)
    g = basis.ground_factor
    for (c, la), s in basis.blocks():
        out[s] += (basis.energies(la) - basis.channels[c].energy) * x[s]
    if coulomb is not None:
        mode = CouplingMode(mode) if mode is not None else coulomb.mode
        if mode is not CouplingMode.MEAN_FIELD:
            for (c, c2, la, lb), blk in coulomb.blocks.items():
                if mode is CouplingMode.INTRACHANNEL and c != c2:
                    continue
                out[basis.block(c, la)] += blk @ x[basis.block(c2, lb)]
    if A_t != 0.0:
        for (c, la), vec in dipole.hole_p.items():
            s = basis.block(c, la)
            out[0] += g * A_t * np.vdot(vec, x[s])
            out[s] += g * A_t * x[0] * vec
        for (c, la), s in basis.blocks():
            m = basis.channels[c].m
            for lb in (la - 1, la + 1):
                sb = basis.block(c, lb)
                if sb is None:
                    continue
                blk = dipole.virtual_block(la, lb, m)
                if blk is not None:
                    out[s] += A_t * (blk @ x[sb])
            for ch2 in basis.channels:
                p = dipole.hole_hole_p[ch2.index, c]
                if p == 0.0:
                    continue
                s2 = basis.block(ch2.index, la)
                if s2 is not None:
                    out[s] -= A_t * p * x[s2]
    return CISState(basis, -1j * out)


def channel_wavefunction(state, channel):
    """Channel wave packet chi_i(r) = sum_a alpha_i^a u_a(r), per (l, m).

    Returns a dict mapping (l, m) to the radial samples on the grid.
    """
    basis = state.basis
    ch = basis.channels[int(getattr(channel, "index", channel))]
    out = {}
    for l, s in basis.channel_blocks(ch.index):
        out[(l, ch.m)] = basis.radial(l) @ state.vector[s]
    return out


def write_tables(path, dipole, coulomb=None):
    """Plain-text dump of all matrix elements for cross-implementation diffs."""
    basis = dipole.basis
    with open(path, "w") as fh:
        fh.write("# element indices value_re value_im\n")
        for l, mat in sorted(dipole.radial_p.items()):
            for (a, b), v in np.ndenumerate(mat):
                fh.write(f"radial_p {l + 1} {a} {l} {b} {v:.17g} 0\n")
        for l, mat in sorted(dipole.radial_z.items()):
            for (a, b), v in np.ndenumerate(mat):
                fh.write(f"radial_z {l + 1} {a} {l} {b} {v:.17g} 0\n")
        for (c, la), vec in sorted(dipole.hole_p.items()):
            for a, v in enumerate(vec):
                fh.write(f"p_ai {basis.channels[c].label} {la} {a} {v.real:.17g} {v.imag:.17g}\n")
        for (i, j), v in np.ndenumerate(dipole.hole_hole_p):
            fh.write(f"p_ij {basis.channels[i].label} {basis.channels[j].label} {v.real:.17g} {v.imag:.17g}\n")
        if coulomb is not None:
            for (c, c2, la, lb), blk in sorted(coulomb.blocks.items()):
                lab1, lab2 = basis.channels[c].label, basis.channels[c2].label
                for (a, b), v in np.ndenumerate(blk):
                    fh.write(f"coulomb {lab1} {lab2} {la} {a} {lb} {b} {v:.17g} 0\n")


def check_finite(vector, step=None):
    if not np.all(np.isfinite(vector)):
        raise NumericalError(f"non-finite amplitudes at step {step}", step=step)
