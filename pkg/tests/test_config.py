import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdcis import constants as C
from tdcis.config import (
    SCHEMA,
    UNITS,
    default_config_text,
    load_config,
    parse_config,
    parse_quantity,
)
from tdcis.errors import ConfigurationError

BUNDLED = [
    "model_pes",
    "model_intensity_scan",
    "tunneling_siegert",
    "hydrogen_propagate",
    "resonance_analysis",
    "beam_quadratic",
]

MINIMAL = """
[run]
scenario = propagate
[atom]
potential = bare-coulomb
[grid]
r_max = 20 bohr
n_points = 100
[pulse]
photon_energy = 13.6 eV
intensity = 1e13 W/cm2
duration = 1 fs
"""


@pytest.mark.parametrize(
    "text,kind,expected",
    [
        ("27.211386245988 eV", "energy", 1.0),
        ("0.5 hartree", "energy", 0.5),
        ("1 fs", "time", 1.0 / C.AU_TIME_FS),
        ("500 as", "time", 0.5 / C.AU_TIME_FS),
        ("1 angstrom", "length", 1e-8 / C.BOHR_CM),
        ("3.50944758e16 W/cm2", "intensity", 1.0),
        ("0.05", "field", 0.05),
        ("2 mm", "beam-length", 2000.0),
    ],
)
def test_parse_quantity(text, kind, expected):
    assert parse_quantity(text, kind) == pytest.approx(expected, rel=1e-12)


@given(st.sampled_from(sorted(UNITS)), st.floats(-1e6, 1e6, allow_nan=False))
def test_unit_round_trip(kind, value):
    for unit, factor in UNITS[kind].items():
        assert parse_quantity(f"{value!r} {unit}", kind) == pytest.approx(value * factor, rel=1e-15, abs=1e-300)


@pytest.mark.parametrize("text,kind", [("3", "energy"), ("3 parsec", "length"), ("fast", "time")])
def test_bad_quantities(text, kind):
    with pytest.raises(ConfigurationError):
        parse_quantity(text, kind)


def test_minimal_config_defaults_and_conversion():
    cfg = parse_config(MINIMAL)
    assert cfg.scenario == "propagate"
    assert cfg["pulse"]["photon_energy"] == pytest.approx(13.6 / C.HARTREE_EV)
    assert cfg["atom"]["l_max"] == SCHEMA["atom"]["l_max"].default
    assert cfg["grid"]["mapping"] == "uniform"
    assert cfg.raw["pulse"]["duration"] == "1 fs"
    assert len(cfg.digest()) == 64
    changed = cfg.replace("grid", n_points=200)
    assert changed["grid"]["n_points"] == 200 and cfg["grid"]["n_points"] == 100
    assert cfg.echo()["grid"]["r_max"] == 20.0


@pytest.mark.parametrize(
    "edit",
    [
        ("n_points = 100", "n_points = 100\nn_pointz = 3"),  # unknown key
        ("[grid]", "[gird]"),  # unknown section
        ("scenario = propagate", "scenario = teleport"),
        ("n_points = 100", "n_points = many"),
        ("n_points = 100", "n_points = 5"),
        ("r_max = 20 bohr", "r_max = 20"),  # unit missing
        ("potential = bare-coulomb", "potential = soft-core"),  # needs depth and width
        ("duration = 1 fs", ""),
        ("[run]\nscenario = propagate", "[run]\nscenario = pes"),  # needs [splitting]
        ("r_max = 20 bohr", "r_max = inf bohr"),
    ],
)
def test_invalid_configs_rejected(edit):
    with pytest.raises(ConfigurationError):
        parse_config(MINIMAL.replace(*edit))


def test_missing_run_section_and_syntax():
    with pytest.raises(ConfigurationError):
        parse_config("[grid]\nr_max = 1 bohr\nn_points = 20\n")
    with pytest.raises(ConfigurationError):
        parse_config("not an ini file")


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_parse(name):
    cfg = parse_config(default_config_text(name))
    assert cfg.has("run")


def test_unknown_bundle_and_missing_file(tmp_path):
    with pytest.raises(ConfigurationError):
        default_config_text("nope")
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "absent.ini")
    (tmp_path / "c.ini").write_text(MINIMAL)
    assert load_config(tmp_path / "c.ini").path.name == "c.ini"


def test_splitting_defaults_resolve_late():
    sp = parse_config(MINIMAL.replace("propagate", "pes") + "[splitting]\nr_c = 40 bohr\n")["splitting"]
    assert sp["cadence"] == 50.0
    # both depend on the pulse and the coupling, so the runner fills them in
    assert sp["p_max"] is None and sp["ion_mixing"] is None
