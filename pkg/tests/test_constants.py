import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdcis import constants as C


def test_reference_values():
    assert C.HARTREE_EV == pytest.approx(27.211386245988, rel=1e-15)
    assert C.AU_TIME_AS == pytest.approx(24.188843265857, rel=1e-12)
    assert C.AU_INTENSITY_W_CM2 == pytest.approx(3.50944758e16, rel=1e-8)


def test_intensity_field_relation():
    # a field of 1 a.u. corresponds to the atomic unit of intensity
    assert C.intensity_to_field(C.AU_INTENSITY_W_CM2) == pytest.approx(1.0, rel=1e-14)
    assert C.field_to_intensity(0.01) == pytest.approx(1e-4 * C.AU_INTENSITY_W_CM2, rel=1e-14)


def test_lifetime_width():
    # hbar = 0.6582119569 eV fs, so 1 fs lifetime is 0.658 eV
    assert C.width_from_lifetime(1000.0) == pytest.approx(0.6582119569, rel=1e-12)
    assert C.width_from_lifetime(26.0) == pytest.approx(25.3158, rel=1e-4)


def test_cross_section_units_second_order():
    # one a.u. of sigma2 is a0^4 t0 in cm^4 s
    expected = C.BOHR_CM**4 * C.AU_TIME_S
    assert C.cross_section_au_to_cgs(1.0, 2) == pytest.approx(expected, rel=1e-14)
    assert C.cross_section_au_to_cgs(1.0, 1) == pytest.approx(C.BOHR_CM**2, rel=1e-14)


finite = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False)


@given(finite)
def test_energy_round_trip(x):
    assert C.hartree_to_ev(C.ev_to_hartree(x)) == pytest.approx(x, rel=1e-12)


@given(finite)
def test_time_round_trip(x):
    assert C.au_to_fs(C.fs_to_au(x)) == pytest.approx(x, rel=1e-12)


@given(st.floats(min_value=1e6, max_value=1e22))
def test_intensity_round_trip(x):
    assert C.field_to_intensity(C.intensity_to_field(x)) == pytest.approx(x, rel=1e-12)


@given(st.floats(min_value=1e-60, max_value=1e-10), st.integers(min_value=1, max_value=5))
def test_cross_section_round_trip(x, order):
    assert C.cross_section_au_to_cgs(C.cross_section_cgs_to_au(x, order), order) == pytest.approx(x, rel=1e-12)


def test_ln2():
    assert C.LN2 == math.log(2.0)
