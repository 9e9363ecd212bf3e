import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdcis.errors import ConfigurationError
from tdcis.grid import (
    aufbau,
    build_grid,
    madelung_order,
    orbital_label,
    radial_eigensystem,
    radial_hamiltonian,
    read_orbitals,
    solve_orbitals,
    write_orbitals,
)
from tdcis.potential import bare_coulomb


@pytest.mark.parametrize("mapping", ["uniform", "sqrt-mapped"])
def test_weights_sum_to_r_max(mapping):
    g = build_grid(50.0, 500, mapping)
    assert g.w.sum() == pytest.approx(50.0, rel=1e-12)
    assert g.r[-1] == 50.0


@pytest.mark.parametrize("mapping", ["uniform", "sqrt-mapped"])
def test_quadrature_of_smooth_decaying_function(mapping):
    # int_0^inf r^2 e^{-r} dr = 2
    g = build_grid(80.0, 4000, mapping)
    assert g.integrate(g.r**2 * np.exp(-g.r)) == pytest.approx(2.0, rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(
    st.floats(min_value=1.0, max_value=500.0),
    st.integers(min_value=16, max_value=3000),
    st.sampled_from(["uniform", "sqrt-mapped"]),
)
def test_grid_is_strictly_increasing_with_positive_weights(r_max, n, mapping):
    g = build_grid(r_max, n, mapping)
    assert np.all(np.diff(g.r) > 0)
    assert g.r[0] > 0 and g.r[-1] == pytest.approx(r_max)
    assert np.all(g.w > 0)


def test_bad_grid_arguments():
    with pytest.raises(ConfigurationError):
        build_grid(-1.0, 100)
    with pytest.raises(ConfigurationError):
        build_grid(10.0, 5)
    with pytest.raises(ConfigurationError):
        build_grid(10.0, 100, "log")


@pytest.mark.parametrize("mapping,n", [("uniform", 20000), ("sqrt-mapped", 8000)])
def test_hydrogen_levels(mapping, n):
    g = build_grid(60.0, n, mapping)
    V = bare_coulomb(g, 1.0).values
    e_s, _ = radial_eigensystem(g, V, 0, count=3)
    e_p, _ = radial_eigensystem(g, V, 1, count=2)
    np.testing.assert_allclose(e_s, [-0.5, -0.125, -1 / 18], atol=2e-6)
    np.testing.assert_allclose(e_p, [-0.125, -1 / 18], atol=2e-6)


def test_second_order_convergence_on_mapped_grid():
    errs = []
    for n in (1000, 2000, 4000):
        g = build_grid(60.0, n, "sqrt-mapped")
        e, _ = radial_eigensystem(g, bare_coulomb(g, 1.0).values, 0, count=1)
        errs.append(abs(e[0] + 0.5))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


def test_eigenvectors_orthonormal_in_weighted_product():
    g = build_grid(40.0, 800, "sqrt-mapped")
    _, u = radial_eigensystem(g, bare_coulomb(g, 2.0).values, 1, e_max=1.0)
    S = (u * g.w[:, None]).T @ u
    np.testing.assert_allclose(S, np.eye(S.shape[0]), atol=1e-10)
    assert np.all(u[-1] == 0.0)


def test_radial_hamiltonian_shape():
    g = build_grid(20.0, 100)
    d, o = radial_hamiltonian(g, np.zeros(100), 2)
    assert d.shape == (99,) and o.shape == (98,)
    assert np.all(o < 0)


def test_energy_window_selection():
    g = build_grid(60.0, 3000, "sqrt-mapped")
    V = bare_coulomb(g, 1.0).values
    e, u = radial_eigensystem(g, V, 0, e_max=-0.1)
    assert e.size == 2 and u.shape == (3000, 2)
    e, _ = radial_eigensystem(g, V, 0, e_max=-10.0)
    assert e.size == 0


def test_free_particle_box_levels():
    # V = 0 in a box of length R: k_n = n pi / R for l = 0
    g = build_grid(10.0, 4000)
    e, _ = radial_eigensystem(g, np.zeros(4000), 0, count=3)
    np.testing.assert_allclose(e, 0.5 * (np.arange(1, 4) * np.pi / 10.0) ** 2, rtol=1e-5)


def test_madelung_and_aufbau():
    assert madelung_order()[:5] == [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1)]
    assert aufbau(2) == [(1, 0)]
    assert aufbau(10) == [(1, 0), (2, 0), (2, 1)]
    assert aufbau(18) == [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1)]
    with pytest.raises(ConfigurationError):
        aufbau(3)
    with pytest.raises(ConfigurationError):
        aufbau(6)


def test_orbital_labels():
    assert orbital_label(1, 0) == "1s"
    assert orbital_label(2, 1, 0) == "2p0"
    assert orbital_label(3, 1, -1) == "3p-1"
    assert orbital_label(4, 2, 2) == "4d+2"


def test_solve_orbitals_neon_like():
    g = build_grid(40.0, 1500, "sqrt-mapped")
    occ, virt = solve_orbitals(g, bare_coulomb(g, 10.0, n_elec=10), 2, 5.0)
    assert [o.label for o in occ] == ["1s", "2s", "2p-1", "2p0", "2p+1"]
    assert occ[0].energy == pytest.approx(-50.0, rel=1e-4)
    # virtual s functions exclude the two occupied s levels
    assert virt.energies(0)[0] == pytest.approx(-100 / 18, rel=1e-3)
    assert virt.size(1) > 0 and len(virt) == sum(virt.size(l) for l in range(3))


def test_orbital_file_round_trip(tmp_path):
    g = build_grid(20.0, 200)
    occ, _ = solve_orbitals(g, bare_coulomb(g, 1.0), 1, 0.0)
    path = tmp_path / "orb.dat"
    write_orbitals(path, g, occ)
    r, back = read_orbitals(path)
    np.testing.assert_array_equal(r, g.r)
    assert [o.label for o in back] == [o.label for o in occ]
    for a, b in zip(occ, back):
        assert b.energy == a.energy
        np.testing.assert_array_equal(np.real(b.u), a.u)


def test_negative_l_max_rejected():
    g = build_grid(20.0, 200)
    with pytest.raises(ConfigurationError):
        solve_orbitals(g, bare_coulomb(g, 1.0), -1, 0.0)
