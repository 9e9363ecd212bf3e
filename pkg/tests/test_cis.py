import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from tdcis.cis import (
    CISBasis,
    CISState,
    CouplingMode,
    build_coulomb_table,
    build_dipole_table,
    channel_wavefunction,
    coulomb_angular,
    coulomb_element,
    dipole_angular,
    dipole_element,
    eom_rhs,
    gaunt,
    multipole_potential,
    write_tables,
)
from tdcis.errors import ConfigurationError
from tdcis.grid import build_grid, solve_orbitals
from tdcis.models import build_model
from tdcis.potential import bare_coulomb

from conftest import random_state

# Gauss-Legendre x uniform-phi product rule, exact for the low orders used here
_X, _WX = np.polynomial.legendre.leggauss(40)
_PHI = np.linspace(0, 2 * np.pi, 64, endpoint=False)


def sphere_integral(f):
    th = np.arccos(_X)[:, None]
    ph = _PHI[None, :]
    return np.sum(_WX[:, None] * f(th, ph)) * (2 * np.pi / _PHI.size)


def Y(l, m, th, ph):
    return sph_harm_y(l, m, th, ph)


@pytest.mark.parametrize(
    "l1,m1,l2,m2,l3,m3", [(1, 0, 1, 0, 2, 0), (2, 1, 1, -1, 1, 0), (3, -2, 2, 1, 1, 1), (2, 0, 2, 0, 0, 0)]
)
def test_gaunt_against_quadrature(l1, m1, l2, m2, l3, m3):
    ref = sphere_integral(lambda th, ph: Y(l1, m1, th, ph) * Y(l2, m2, th, ph) * Y(l3, m3, th, ph))
    assert gaunt(l1, m1, l2, m2, l3, m3) == pytest.approx(ref.real, abs=1e-12)


def test_gaunt_selection_rules():
    assert gaunt(1, 0, 1, 0, 1, 0) == 0.0  # parity
    assert gaunt(1, 1, 1, 0, 2, 0) == 0.0  # m sum
    assert gaunt(0, 0, 1, 0, 3, 0) == 0.0  # triangle


@pytest.mark.parametrize("l,m", [(1, 0), (2, 0), (2, 1), (3, -2), (4, 3)])
def test_dipole_angular_against_quadrature(l, m):
    ref = sphere_integral(lambda th, ph: np.conj(Y(l, m, th, ph)) * np.cos(th) * Y(l - 1, m, th, ph))
    assert dipole_angular(l, m) == pytest.approx(ref.real, abs=1e-12)


def test_coulomb_angular_monopole():
    # L = 0 between s orbitals: 4 pi * (1 / sqrt(4 pi))^2 squared = 1
    assert coulomb_angular(0, 0, 0, 0, 0, 0, 0, 0, 0) == pytest.approx(1.0)


@pytest.fixture(scope="module")
def hydrogen():
    g = build_grid(60.0, 4000, "sqrt-mapped")
    occ, virt = solve_orbitals(g, bare_coulomb(g, 1.0), 3, 50.0, n_elec=2)
    return g, occ, virt


def test_hydrogen_f0_integral(hydrogen):
    g, occ, _ = hydrogen
    s = occ[0]
    assert coulomb_element(g, s, s, s, s) == pytest.approx(5.0 / 8.0, rel=1e-5)


def test_multipole_potential_against_double_sum():
    g = build_grid(10.0, 120)
    rho = np.exp(-g.r) * g.r**2
    for L in (0, 1, 2):
        rl = np.minimum.outer(g.r, g.r)
        rg = np.maximum.outer(g.r, g.r)
        direct = (rl**L / rg ** (L + 1)) @ (g.w * rho)
        np.testing.assert_allclose(multipole_potential(g, rho, L), direct, rtol=1e-12)


def test_hydrogen_oscillator_strength(hydrogen):
    g, occ, virt = hydrogen
    s = occ[0]
    p2 = virt.orbitals[1][0]
    p2 = p2.with_m(0)
    z = dipole_element(g, p2, s, "length")
    p = dipole_element(g, p2, s, "velocity")
    dE = p2.energy - s.energy
    # analytic value 2^15 / 3^10 * ... = 0.4162
    assert 2 * dE * abs(z) ** 2 == pytest.approx(0.41620, rel=2e-4)
    assert 2 * abs(p) ** 2 / dE == pytest.approx(0.41620, rel=2e-3)
    # p and z are related by p_ab = i (e_a - e_b) z_ab
    assert p == pytest.approx(1j * dE * z, rel=2e-3)


def test_dipole_hermiticity(hydrogen):
    g, occ, virt = hydrogen
    a = virt.orbitals[1][2].with_m(0)
    b = virt.orbitals[2][1].with_m(0)
    assert dipole_element(g, a, b) == pytest.approx(np.conj(dipole_element(g, b, a)))
    assert dipole_element(g, a, a) == 0.0


def test_thomas_reiche_kuhn_sum(hydrogen):
    g, occ, virt = hydrogen
    s = occ[0]
    total = 0.0
    for orb in virt.orbitals[1]:
        z = dipole_element(g, orb.with_m(0), s, "length")
        total += 2 * (orb.energy - s.energy) * abs(z) ** 2
    # the discretised continuum up to 50 hartree carries nearly all strength
    assert total == pytest.approx(1.0, abs=5e-3)


def test_coulomb_blocks_hermitian(two_channel_model):
    tab = two_channel_model.coulomb
    for (c, c2, la, lb), blk in tab.blocks.items():
        partner = tab.blocks[(c2, c, lb, la)]
        np.testing.assert_allclose(blk, partner.T, atol=1e-13)


def test_default_multipole_cutoff_is_exact(two_channel_model):
    m = two_channel_model
    more = build_coulomb_table(m.basis, "interchannel", m.coulomb.l_multipole_max + 2)
    assert set(more.blocks) == set(m.coulomb.blocks)
    for k, blk in m.coulomb.blocks.items():
        np.testing.assert_allclose(more.blocks[k], blk, atol=1e-14)


def test_intrachannel_and_mean_field_tables(two_channel_model):
    b = two_channel_model.basis
    intra = build_coulomb_table(b, CouplingMode.INTRACHANNEL)
    assert intra.blocks and all(c == c2 for c, c2, _, _ in intra.blocks)
    assert len(build_coulomb_table(b, "mean-field-only")) == 0


def test_multipole_cutoff_below_minimum_rejected():
    m = build_model(20, 200, "sqrt-mapped", "bare-coulomb", Z=10, n_elec=10, l_max=2, e_cut=2.0, active=["2p"])
    assert [c.label for c in m.basis.channels] == ["2p-1", "2p0", "2p+1"]
    with pytest.raises(ConfigurationError):
        build_coulomb_table(m.basis, "interchannel", 1)


def test_active_selection_errors(two_channel_model):
    m = two_channel_model
    with pytest.raises(ConfigurationError):
        CISBasis(m.grid, m.occupied, m.virtuals, active=["3d"])
    only = CISBasis(m.grid, m.occupied, m.virtuals, active=["2s"])
    assert [c.label for c in only.channels] == ["2s"]


def test_state_dimension_checked(small_model):
    with pytest.raises(ConfigurationError):
        CISState(small_model.basis, np.zeros(3))


def test_eom_matches_operator(two_channel_model, rng):
    m = two_channel_model
    H = m.hamiltonian()
    x = random_state(m.basis, rng)
    for A in (0.0, 0.37):
        d = eom_rhs(CISState(m.basis, x), A, m.dipole, m.coulomb)
        np.testing.assert_allclose(d.vector, -1j * H.apply(x, A), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.floats(min_value=-2.0, max_value=2.0))
def test_eom_preserves_norm(two_channel_model, seed, A):
    m = two_channel_model
    x = random_state(m.basis, np.random.default_rng(seed))
    d = eom_rhs(CISState(m.basis, x), A, m.dipole, m.coulomb)
    # d/dt <x|x> = 2 Re <x|dx/dt> vanishes for a Hermitian generator
    assert abs(2 * np.vdot(x, d.vector).real) < 1e-11


def test_eom_rejects_foreign_tables(two_channel_model, small_model):
    with pytest.raises(ValueError):
        eom_rhs(small_model.basis.ground(), 0.1, two_channel_model.dipole)


def test_intrachannel_mode_override(two_channel_model, rng):
    m = two_channel_model
    x = CISState(m.basis, random_state(m.basis, rng))
    full = eom_rhs(x, 0.0, m.dipole, m.coulomb)
    intra = eom_rhs(x, 0.0, m.dipole, m.coulomb, mode="intrachannel")
    assert not np.allclose(full.vector, intra.vector)


def test_channel_wavefunction(small_model, rng):
    b = small_model.basis
    st_ = CISState(b, random_state(b, rng))
    waves = channel_wavefunction(st_, 0)
    for (l, m), u in waves.items():
        np.testing.assert_allclose(u, b.radial(l) @ st_.amplitudes(0, l))


def test_ground_state_and_populations(two_channel_model):
    b = two_channel_model.basis
    g = b.ground()
    assert g.norm() == 1.0 and g.alpha0 == 1.0
    assert all(g.channel_population(c.index) == 0.0 for c in b.channels)
    assert b.ground_factor == pytest.approx(np.sqrt(2.0))


def test_write_tables(tmp_path, small_model):
    path = tmp_path / "tables.dat"
    write_tables(path, small_model.dipole, small_model.coulomb)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("#")
    assert any(line.startswith("p_ai") for line in lines)
    assert any(line.startswith("radial_p") for line in lines)
