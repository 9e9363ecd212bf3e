import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdcis.beam import (
    BeamProfile,
    TabulatedSignal,
    effective_order,
    linear_reference,
    slice_signal,
    volume_signal,
    volume_signal_direct,
    volume_signal_fluence_outer,
    volume_signal_monte_carlo,
)
from tdcis.errors import ConfigurationError

beams = st.builds(
    BeamProfile,
    st.floats(0.5, 20.0),
    st.floats(1.0, 100.0),
    st.floats(1.0, 1e6),
)


def test_profile_invariants():
    b = BeamProfile(2.0, 10.0, 1000.0)
    z = np.linspace(-30, 30, 61)
    np.testing.assert_allclose(b.width_sq(z), 4.0 * (1 + (z / 10.0) ** 2), rtol=1e-15)
    F0 = b.peak_fluence(np.abs(z[z >= 0]))
    assert np.all(np.diff(F0) < 0)
    assert (b.z_min, b.z_max) == (-30.0, 30.0)
    assert b.max_fluence == pytest.approx(4000 * math.log(2) / (4 * math.pi))
    # the transverse integral of the fluence is the photon number times 4 ln2
    from scipy.integrate import quad

    area = quad(lambda r: 2 * math.pi * r * b.fluence(r, 7.0), 0, np.inf)[0]
    assert area == pytest.approx(4 * 1000 * math.log(2), rel=1e-10)


def test_profile_validation():
    with pytest.raises(ConfigurationError):
        BeamProfile(0.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        BeamProfile(1.0, 1.0, 1.0, z_min=2.0, z_max=1.0)
    off_axis = BeamProfile(1.0, 1.0, 1.0, z_min=2.0, z_max=5.0)
    assert off_axis.max_fluence == pytest.approx(float(off_axis.peak_fluence(2.0)))


@settings(max_examples=20, deadline=None)
@given(beams, st.floats(1e-6, 1e3))
def test_linear_signal_identity(beam, sigma):
    ref = linear_reference(sigma, beam)
    assert volume_signal(lambda F: sigma * F, beam, n_z=32) == pytest.approx(ref, rel=1e-3)
    assert volume_signal_fluence_outer(lambda F: sigma * F, beam) == pytest.approx(ref, rel=1e-3)


def test_linear_slice_is_independent_of_z():
    b = BeamProfile(3.0, 5.0, 50.0)
    vals = [slice_signal(lambda F: 2.0 * F, b, z) for z in (0.0, 3.0, 12.0)]
    np.testing.assert_allclose(vals, 2.0 * 4 * 50 * math.log(2), rtol=1e-10)


def test_zero_signal():
    assert volume_signal(lambda F: 0.0, BeamProfile(1.0, 1.0, 1.0)) == 0.0


@pytest.mark.parametrize("signal", [lambda F: F**2, lambda F: F**3 + 0.5 * F, lambda F: 1e-3 * F**4])
def test_substitution_matches_direct_quadrature(signal):
    b = BeamProfile(2.0, 10.0, 100.0)
    direct = volume_signal_direct(signal, b)
    assert volume_signal(signal, b) == pytest.approx(direct, rel=1e-3)
    assert volume_signal_fluence_outer(signal, b) == pytest.approx(direct, rel=1e-3)


def test_quadratic_signal_against_monte_carlo():
    b = BeamProfile(2.0, 10.0, 1000.0)
    mc, err = volume_signal_monte_carlo(lambda F: F**2, b, n_samples=8_000_000, seed=3)
    quadrature = volume_signal(lambda F: F**2, b)
    assert err / mc < 2e-3
    assert quadrature == pytest.approx(mc, rel=5e-3)


def test_monte_carlo_is_seeded():
    b = BeamProfile(1.0, 1.0, 10.0)
    a = volume_signal_monte_carlo(lambda F: F, b, n_samples=10_000, seed=7)
    c = volume_signal_monte_carlo(lambda F: F, b, n_samples=10_000, seed=7)
    assert a == c


@pytest.mark.parametrize("N", [1, 2, 3])
def test_photon_number_scaling(N):
    b = BeamProfile(2.0, 10.0, 100.0)
    S = lambda F: F**N  # noqa: E731
    assert volume_signal(S, b.scaled(3.0)) == pytest.approx(3.0**N * volume_signal(S, b), rel=1e-10)
    assert effective_order(S, b) == pytest.approx(N, abs=1e-8)


def test_saturating_signal_dilutes_order():
    b = BeamProfile(2.0, 10.0, 1000.0)
    assert effective_order(lambda F: -math.expm1(-((F / 20.0) ** 2)), b) < 1.9


def test_convergence_report():
    value, report = volume_signal(lambda F: F**2, BeamProfile(2.0, 10.0, 100.0), report=True)
    assert report["fine"] == value and report["relative_change"] < 1e-10


def test_tabulated_signal(tmp_path):
    F = np.linspace(0.5, 100.0, 200)
    path = tmp_path / "signal.dat"
    np.savetxt(path, np.column_stack([F, 0.01 * F**2]))
    sig = TabulatedSignal.read(path)
    assert sig(0.0) == 0.0 and sig.nodes[0] == 0.0
    assert float(sig(50.0)) == pytest.approx(25.0, rel=1e-3)
    with pytest.raises(ConfigurationError):
        sig(150.0)
    b = BeamProfile(2.0, 10.0, 100.0)
    assert volume_signal(sig, b) == pytest.approx(volume_signal(lambda x: 0.01 * x**2, b), rel=2e-3)
    with pytest.raises(ConfigurationError):
        volume_signal(sig, BeamProfile(0.5, 10.0, 100.0))


def test_tabulated_signal_validation():
    with pytest.raises(ConfigurationError):
        TabulatedSignal([1.0], [1.0])
    with pytest.raises(ConfigurationError):
        TabulatedSignal([1.0, 1.0, 2.0], [0.0, 1.0, 2.0])
