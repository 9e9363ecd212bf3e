import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tdcis import constants as C
from tdcis.analysis import (
    IonizationRecord,
    ResonanceModel,
    bends_below_power_law,
    cross_section_from_yield,
    find_knees,
    fluence,
    fwhm,
    keldysh,
    keldysh_lab,
    multi_resonance_sigma2,
    order_fit,
    photon_flux,
    ponderomotive,
    rate_solve,
    two_step_sigma2,
)
from tdcis.errors import ConfigurationError
from tdcis.propagator import Pulse


def test_keldysh_unit_value_and_scaling():
    assert keldysh(2.0, 1.0, 1.0) == pytest.approx(1.0)
    assert keldysh(8.0, 1.0, 1.0) == pytest.approx(0.5)
    assert ponderomotive(2.0, 1.0) == 0.5


def test_keldysh_hydrogen_800nm():
    # independent evaluation in SI: Up[eV] = 9.337e-14 I[W/cm2] lambda[um]^2
    up_ev = 9.3373e-14 * 1e14 * 0.8**2
    expected = math.sqrt(13.6057 / (2 * up_ev))
    omega_ev = C.hartree_to_ev(0.0570)
    assert keldysh_lab(1e14, omega_ev, C.hartree_to_ev(0.5)) == pytest.approx(expected, rel=2e-3)
    assert keldysh_lab(1e14, omega_ev, C.hartree_to_ev(0.5)) == pytest.approx(1.06, abs=0.01)


def test_keldysh_rejects_nonpositive():
    with pytest.raises(ConfigurationError):
        keldysh(0.0, 1.0, 1.0)


pulses = st.builds(Pulse, st.floats(1e-4, 1.0), st.floats(0.05, 5.0), st.floats(5.0, 2000.0))


@settings(max_examples=40, deadline=None)
@given(pulses, st.sampled_from([1, 2]))
def test_closed_form_fluence_matches_quadrature(pulse, order):
    direct = quad(lambda t: photon_flux(pulse, t) ** order, -np.inf, np.inf, epsabs=0, epsrel=1e-12)[0]
    assert fluence(pulse, order) == pytest.approx(direct, rel=1e-8)
    assert fluence(pulse, order, quadrature=True) == pytest.approx(direct, rel=1e-8)


@given(pulses, st.integers(1, 4), st.floats(0.1, 10.0))
def test_fluence_field_scaling(pulse, order, k):
    scaled = Pulse(k * pulse.F0, pulse.omega, pulse.tau)
    assert fluence(scaled, order) == pytest.approx(k ** (2 * order) * fluence(pulse, order), rel=1e-12)


def test_fluence_duration_scaling():
    p = Pulse(0.01, 0.5, 100.0)
    q = Pulse(0.01, 0.5, 200.0)
    for N in (1, 2, 3):
        assert fluence(q, N) / fluence(p, N) == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(ConfigurationError):
        fluence(p, 0)


def test_rate_solve_constant_flux():
    sol = rate_solve({1: 0.02}, lambda t: np.full_like(np.asarray(t, float), 3.0), t_span=(0.0, 10.0), n_steps=2000)
    np.testing.assert_allclose(sol.ground, np.exp(-0.06 * sol.t), rtol=1e-10)
    assert sol.final(1) == pytest.approx(1 - math.exp(-0.6), rel=1e-10)
    np.testing.assert_allclose(sol.ground + sol.yields[1], 1.0, atol=1e-13)


def test_rate_solve_without_depletion_is_the_definition():
    p = Pulse(0.02, 0.8, 300.0)
    sigmas = {1: 1e-3, 2: 5e-2}
    sol = rate_solve(sigmas, p, depletion=False)
    for N, s in sigmas.items():
        F = fluence(p, N)
        assert sol.final(N) == pytest.approx(s * F, rel=1e-12)
        sigma_back = C.cross_section_cgs_to_au(cross_section_from_yield(sol.final(N), F, N), N)
        assert sigma_back == pytest.approx(s, rel=1e-12)
    assert np.all(sol.ground == 1.0)


def test_rate_solve_depletion_bends_power_law():
    I = np.logspace(-1, 2, 7)
    yields = []
    for i in I:
        p = Pulse(0.01 * math.sqrt(i), 0.8, 300.0)
        yields.append(rate_solve({2: 1.0}, p).final(2))
    assert bends_below_power_law(I, yields, 2)
    assert sum(yields) > 0 and yields[-1] < 1.0


def test_rate_solve_validation():
    with pytest.raises(ConfigurationError):
        rate_solve({1: -1.0}, Pulse(0.1, 0.5, 10.0))
    with pytest.raises(ConfigurationError):
        rate_solve({1: 1.0}, lambda t: 1.0)


def test_cross_section_units():
    # sigma_2 in a.u. is a0^4 t0; in cgs cm^4 s
    assert C.cross_section_au_to_cgs(1.0, 2) == pytest.approx(C.BOHR_CM**4 * C.AU_TIME_S, rel=1e-14)
    assert cross_section_from_yield(0.01, 2.0, 1) == pytest.approx(0.005 * C.BOHR_CM**2)
    with pytest.raises(ConfigurationError):
        cross_section_from_yield(0.01, 0.0, 1)
    with pytest.warns(RuntimeWarning):
        cross_section_from_yield(0.2, 1.0, 1)


@given(st.floats(0.5, 4.0), st.floats(1e-12, 1e-3))
def test_order_fit_exact_power_laws(N, c):
    I = np.logspace(12, 14, 6)
    fit = order_fit((I, c * (I / 1e12) ** N), round(N))
    assert fit.slope == pytest.approx(N, rel=1e-3)
    assert fit.stderr < 0.01


def test_order_fit_from_records_and_errors():
    recs = [IonizationRecord(20.0, i, 5.0, {1: 1e-15 * i, 2: 1e-30 * i**2}) for i in (1e12, 1e13, 1e14)]
    assert order_fit(recs, 2).slope == pytest.approx(2.0)
    assert order_fit(recs, 1).deviation == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        order_fit(recs[:2], 1)
    with pytest.raises(ConfigurationError):
        order_fit(([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]), 1)
    with pytest.raises(ConfigurationError):
        IonizationRecord(20.0, 1e12, 5.0, {1: 0.7, 2: 0.5})
    with pytest.raises(ConfigurationError):
        IonizationRecord(20.0, 1e12, 5.0, {1: -0.1})


def lorentzian(x, x0, g):
    return 1.0 / ((x - x0) ** 2 + 0.25 * g**2)


def test_two_step_shifts_lorentzian_down():
    w = np.linspace(80, 160, 4001)
    s1 = lorentzian(w, 100.0, 10.0)
    peaks = {}
    for l in (0, 3):
        s2 = two_step_sigma2(w, s1, l, 67.0)
        peaks[l] = w[np.argmax(s2)]
        assert peaks[l] < 100.0
        assert s2.max() == pytest.approx(s1.max())
    assert peaks[3] < peaks[0]
    with pytest.raises(ConfigurationError):
        two_step_sigma2(w, s1, 1, 170.0)


def test_power_law_factor_cannot_narrow_a_symmetric_peak():
    # E^-p is log-convex, so the product with a Lorentzian has a smaller
    # log-curvature at its maximum and a larger width
    w = np.linspace(80, 160, 4001)
    s1 = lorentzian(w, 100.0, 10.0)
    for l in (0, 3):
        assert fwhm(w, two_step_sigma2(w, s1, l, 67.0)) > fwhm(w, s1)


def test_two_step_narrows_a_skewed_resonance():
    # sharp onset above threshold and a long high-energy tail
    w = np.linspace(68, 200, 6601)
    s1 = (w - 67.0) ** 2 * np.exp(-(w - 67.0) / 15.0)
    widths = {}
    for l in (0, 3):
        s2 = two_step_sigma2(w, s1, l, 67.0)
        assert w[np.argmax(s2)] < w[np.argmax(s1)]
        widths[l] = fwhm(w, s2)
        assert widths[l] < fwhm(w, s1)
    assert widths[3] < widths[0]


def test_single_resonance_reduces_to_lorentzian():
    m = ResonanceModel([(90.0, 10.0, 1.0)])
    E = np.linspace(50, 130, 101)
    np.testing.assert_allclose(multi_resonance_sigma2(m, E), lorentzian(E, 90.0, 10.0), rtol=1e-14)


def test_degenerate_resonances_quadruple():
    E = np.linspace(50, 130, 101)
    one = multi_resonance_sigma2(ResonanceModel([(90.0, 10.0, 1.0)]), E)
    two = multi_resonance_sigma2(ResonanceModel([(90.0, 10.0, 1.0), (90.0, 10.0, 1.0)]), E)
    np.testing.assert_allclose(two, 4 * one, rtol=1e-14)


@given(
    st.lists(
        st.tuples(st.floats(50, 150), st.floats(0.1, 50), st.complex_numbers(max_magnitude=10, allow_nan=False)),
        min_size=1,
        max_size=4,
    )
)
def test_multi_resonance_real_nonnegative(res):
    E = np.linspace(40, 160, 301)
    s = multi_resonance_sigma2(ResonanceModel(res), E)
    assert np.isrealobj(s) and np.all(s >= 0) and np.all(np.isfinite(s))


def test_table_resonances_show_a_knee():
    m = ResonanceModel.from_lifetimes([(74.3, 26.0, 1.0), (107.6, 11.0, 1.0)])
    assert m.resonances[0][1] == pytest.approx(C.HBAR_EV_FS * 1e3 / 26.0)
    E = np.linspace(50, 150, 2001)
    s = multi_resonance_sigma2(m, E)
    knees = find_knees(E, s)
    assert len(knees) >= 1 and 74.3 < knees[0] < 120.0
    with pytest.raises(ConfigurationError):
        ResonanceModel([(90.0, 0.0, 1.0)])
    with pytest.raises(ConfigurationError):
        ResonanceModel([])


def test_fwhm_of_gaussian():
    x = np.linspace(-10, 10, 20001)
    assert fwhm(x, np.exp(-(x**2) / 2)) == pytest.approx(2 * math.sqrt(2 * math.log(2)), rel=1e-6)
