"""Block-dense CIS Hamiltonian used in the propagation hot loop.

The operator is H(t) = H_0 + A(t) P   (velocity form)
                or  H_0 + F(t) Z      (length form),
optionally minus i W for an absorbing potential acting on the excited
electron.  H_0 holds the orbital-energy differences and the Coulomb blocks.
All radial blocks are real, so products are taken on the real and
imaginary parts together without promoting the matrices to complex.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .cis import dipole_angular


def _rmul(mat, x):
    """Real matrix times complex vector without a complex copy of ``mat``."""
    x = np.ascontiguousarray(x)
    return (mat @ x.view(np.float64).reshape(-1, 2)).view(np.complex128).ravel()


class CISHamiltonian:
    """Applies the CIS Hamiltonian to flat amplitude vectors.

    Parameters
    ----------
    basis : CISBasis
    dipole : DipoleTable
    coulomb : CoulombTable, optional
    cap : AbsorbingPotential, optional
    gauge : {"velocity", "length"}
    """

    def __init__(self, basis, dipole, coulomb=None, cap=None, gauge="velocity", backend="auto"):
        if gauge not in ("velocity", "length"):
            raise ValueError(f"unknown gauge {gauge!r}")
        self.basis = basis
        self.dipole = dipole
        self.coulomb = coulomb
        self.gauge = gauge
        self.dim = basis.dim
        self.diag = basis.excitation_energies()
        self.g = basis.ground_factor
        self._coul = []
        if coulomb is not None:
            for (c, c2, la, lb), blk in coulomb.blocks.items():
                self._coul.append((basis.block(c, la), basis.block(c2, lb), blk))
        # dipole couplings between neighbouring virtual blocks of one channel
        self._ladder = []
        radial = dipole.radial_p if gauge == "velocity" else dipole.radial_z
        for ch in basis.channels:
            for l, s_lo in basis.channel_blocks(ch.index):
                s_up = basis.block(ch.index, l + 1)
                if s_up is None or l not in radial:
                    continue
                c = dipole_angular(l + 1, ch.m)
                if c:
                    self._ladder.append((s_up, s_lo, c, radial[l]))
        self._ground = []
        holes = dipole.hole_p if gauge == "velocity" else dipole.hole_z
        for (c, la), vec in holes.items():
            self._ground.append((basis.block(c, la), np.asarray(vec, dtype=complex)))
        hh = dipole.hole_hole_p if gauge == "velocity" else dipole.hole_hole_z
        self._hole = []
        for ch in basis.channels:
            for ch2 in basis.channels:
                p = hh[ch2.index, ch.index]
                if p == 0:
                    continue
                for l, s in basis.channel_blocks(ch.index):
                    s2 = basis.block(ch2.index, l)
                    if s2 is not None:
                        self._hole.append((s, s2, complex(p)))
        self.cap = cap
        self._cap = []
        if cap is not None and cap.eta > 0:
            prof = basis.grid.w * cap.strength(basis.grid.r)
            mats = {}
            for (c, l), s in basis.blocks():
                if l not in mats:
                    U = basis.radial(l)
                    mats[l] = (U * prof[:, None]).T @ U
                self._cap.append((s, mats[l]))
        self._sparse = None
        if backend not in ("auto", "sparse", "blocks"):
            raise ValueError(f"unknown backend {backend!r}")
        if backend != "blocks":
            h0 = self.matrix(0.0, include_cap=False)
            v = self.matrix(1.0, include_cap=False) - h0
            v.eliminate_zeros()
            w = self.matrix(0.0, include_cap=True) - h0
            w.eliminate_zeros()
            nnz = h0.nnz + v.nnz + w.nnz
            n_ops = len(self._coul) + 2 * len(self._ladder) + 2 * len(self._ground) + len(self._hole) + len(self._cap)
            # rough per-call cost model: python overhead per block versus
            # complex CSR traffic per stored element
            blocks_cost = 8e-6 * n_ops + 0.6e-9 * nnz
            sparse_cost = 3e-9 * nnz
            if backend == "sparse" or sparse_cost < blocks_cost:
                self._sparse = (h0, h0 + w, v)
        self.backend = "sparse" if self._sparse is not None else "blocks"

    @property
    def has_cap(self):
        return bool(self._cap)

    @property
    def complex_symmetric(self):
        """True when H^T = H, which holds for the length form."""
        return self.gauge == "length"

    def field_term(self, t, pulse):
        """Coupling strength at time t: A(t) (velocity) or F(t) (length)."""
        if pulse is None:
            return 0.0
        return pulse.vector_potential(t) if self.gauge == "velocity" else pulse.field(t)

    def apply(self, x, coupling=0.0, include_cap=True):
        """Return H x for a given field coupling value."""
        if self._sparse is not None:
            h0, h0w, v = self._sparse
            out = h0w @ x if include_cap else h0 @ x
            if coupling:
                out += coupling * (v @ x)
            return out
        out = self.diag * x
        for sa, sb, blk in self._coul:
            out[sa] += _rmul(blk, x[sb])
        if coupling:
            self._apply_coupling(x, out, coupling)
        if include_cap and self._cap:
            for s, W in self._cap:
                out[s] -= 1j * _rmul(W, x[s])
        return out

    def _apply_coupling(self, x, out, a):
        vel = self.gauge == "velocity"
        ga = self.g * a
        x0 = x[0]
        for s, vec in self._ground:
            out[0] += ga * np.vdot(vec, x[s])
            out[s] += (ga * x0) * vec
        for s_up, s_lo, c, R in self._ladder:
            if vel:
                out[s_up] += (-1j * c * a) * _rmul(R, x[s_lo])
                out[s_lo] += (1j * c * a) * _rmul(R.T, x[s_up])
            else:
                out[s_up] += (c * a) * _rmul(R, x[s_lo])
                out[s_lo] += (c * a) * _rmul(R.T, x[s_up])
        for s, s2, p in self._hole:
            out[s] -= (a * p) * x[s2]

    def energy(self, x):
        """Expectation value <x|H_0|x> / <x|x> of the field-free operator."""
        return float(np.vdot(x, self.apply(x, 0.0, include_cap=False)).real / np.vdot(x, x).real)

    def matrix(self, coupling=0.0, include_cap=True, fmt="csr"):
        """Explicit sparse matrix of the operator at a given coupling."""
        n = self.dim
        rows, cols, vals = [], [], []

        def put(s_row, s_col, blk):
            blk = np.asarray(blk)
            i, j = np.nonzero(blk)
            rows.append(i + s_row.start)
            cols.append(j + s_col.start)
            vals.append(blk[i, j].astype(complex))

        rows.append(np.arange(n))
        cols.append(np.arange(n))
        vals.append(self.diag.astype(complex))
        for sa, sb, blk in self._coul:
            put(sa, sb, blk)
        if coupling:
            a = coupling
            vel = self.gauge == "velocity"
            for s, vec in self._ground:
                put(s, slice(0, 1), (self.g * a * vec)[:, None])
                put(slice(0, 1), s, (self.g * a * vec.conj())[None, :])
            for s_up, s_lo, c, R in self._ladder:
                f = -1j * c * a if vel else c * a
                put(s_up, s_lo, f * R)
                put(s_lo, s_up, np.conj(f) * R.T)
            for s, s2, p in self._hole:
                put(s, s2, -a * p * np.eye(s.stop - s.start))
        if include_cap:
            for s, W in self._cap:
                put(s, s, -1j * W)
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        return mat.asformat(fmt)
