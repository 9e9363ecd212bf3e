"""Run configuration: ``[section]`` headers with ``key = value unit`` lines.

Physical quantities carry their unit in the file (``photon_energy = 27.2 eV``,
``duration = 2 fs``, ``r_max = 240 bohr``).  Every value is converted to
atomic units on load and the conversions are logged.  Unknown sections or
keys are rejected so that typos never pass silently.
"""

from __future__ import annotations

import configparser
import hashlib
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import constants as C
from .errors import ConfigurationError

log = logging.getLogger(__name__)

SCENARIOS = ("propagate", "pes", "siegert-scan", "intensity-scan", "analyze", "beam-volume")

# unit name -> factor to atomic units, per quantity kind
UNITS = {
    "energy": {"hartree": 1.0, "au": 1.0, "ev": 1.0 / C.HARTREE_EV},
    "time": {"au": 1.0, "fs": 1.0 / C.AU_TIME_FS, "as": 1.0 / C.AU_TIME_AS},
    "length": {"bohr": 1.0, "au": 1.0, "angstrom": 1e-8 / C.BOHR_CM, "nm": 1e-7 / C.BOHR_CM},
    "intensity": {"w/cm2": 1.0 / C.AU_INTENSITY_W_CM2, "au": 1.0},
    "field": {"au": 1.0},
    # beam lengths stay in lab units; fluence follows as photons per length^2
    "beam-length": {"um": 1.0, "mm": 1e3, "cm": 1e4, "m": 1e6},
}


@dataclass(frozen=True)
class Key:
    kind: str
    default: object = None
    required: bool = False
    choices: tuple = ()


def _k(kind, default=None, required=False, choices=()):
    return Key(kind, default, required, choices)


SCHEMA = {
    "run": {
        "scenario": _k("str", required=True, choices=SCENARIOS),
        "label": _k("str", "run"),
    },
    "atom": {
        "potential": _k("str", "soft-core", choices=("bare-coulomb", "soft-core", "hfs")),
        "Z": _k("float", 1.0),
        "n_elec": _k("int", 2),
        "depth": _k("energy"),
        "width": _k("length"),
        "l_max": _k("int", 3),
        "e_cut": _k("energy", 3.0),
        "active": _k("list-str"),
        "coupling": _k("str", "mean-field-only", choices=("mean-field-only", "intrachannel", "interchannel")),
        "closed_shell": _k("bool", True),
        "l_multipole_max": _k("int"),
    },
    "grid": {
        "r_max": _k("length", required=True),
        "n_points": _k("int", required=True),
        "mapping": _k("str", "uniform", choices=("uniform", "sqrt-mapped")),
    },
    "pulse": {
        "photon_energy": _k("energy"),
        "intensity": _k("intensity"),
        "duration": _k("time"),
        "phase": _k("float", 0.0),
    },
    "propagation": {
        "method": _k("str", "rk4", choices=("rk4", "lanczos")),
        "dt": _k("time", 0.05),
        "krylov_dim": _k("int", 12),
        "t_start": _k("time"),
        "t_end": _k("time"),
        "gauge": _k("str", "velocity", choices=("velocity", "length")),
        "record_every": _k("int", 20),
        "cap_radius": _k("length"),
        "cap_strength": _k("float"),
    },
    "splitting": {
        "r_c": _k("length", required=True),
        "delta": _k("length", 4.0),
        "first": _k("time"),
        "cadence": _k("time", 50.0),
        "p_max": _k("float"),
        "n_p": _k("int", 1200),
        "n_theta": _k("int", 24),
        "peak_half_width": _k("energy"),
        "ion_mixing": _k("bool"),
    },
    "siegert": {
        "field_max": _k("field", required=True),
        "n_fields": _k("int", 11),
        "n_eigs": _k("int", 4),
        "cap_radius": _k("length", required=True),
        "cap_strength": _k("float", 0.01),
        "eta_scan": _k("list-float"),
        "eta_field": _k("field"),
        "overlap_floor": _k("float", 0.5),
    },
    "scan": {
        "intensities": _k("list-intensity", required=True),
        "orders": _k("list-int", (1, 2)),
    },
    "analysis": {
        "ionization_potential": _k("energy"),
        "orders": _k("list-int", (1, 2)),
        "sigma_1": _k("float"),
        "sigma_2": _k("float"),
        "depletion": _k("bool", True),
        "yield_1": _k("float"),
        "yield_2": _k("float"),
        "resonances": _k("list-float"),
        "energy_min": _k("float", 40.0),
        "energy_max": _k("float", 180.0),
        "energy_points": _k("int", 1401),
    },
    "beam": {
        "w0": _k("beam-length", required=True),
        "z0": _k("beam-length", required=True),
        "n_phot": _k("float", required=True),
        "z_min": _k("beam-length"),
        "z_max": _k("beam-length"),
        "signal_file": _k("str"),
        "signal_order": _k("int"),
        "signal_coefficient": _k("float", 1.0),
        "mc_samples": _k("int", 0),
    },
    "check": {
        "observable": _k("str", "ionization", choices=("ionization", "norm", "yield")),
        "tolerance": _k("float", 1e-2),
    },
}

# sections each scenario needs (beyond [run])
REQUIRED_SECTIONS = {
    "propagate": ("atom", "grid", "pulse"),
    "pes": ("atom", "grid", "pulse", "splitting"),
    "siegert-scan": ("atom", "grid", "siegert"),
    "intensity-scan": ("atom", "grid", "pulse", "splitting", "scan"),
    "analyze": ("pulse", "analysis"),
    "beam-volume": ("beam",),
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(text, kind, where=""):
    """Parse ``'<number> <unit>'`` to atomic units (lab units for beam lengths).

    A bare number is accepted only for quantities whose sole unit is a.u.
    """
    m = _NUM.match(text)
    if not m:
        raise ConfigurationError(f"{where}: cannot parse quantity {text!r}")
    value = float(m.group(1))
    unit = m.group(2).lower()
    table = UNITS[kind]
    if not unit:
        if kind in ("field",) or set(table) <= {"au"}:
            return value
        raise ConfigurationError(f"{where}: {text!r} needs a unit (one of {', '.join(table)})")
    if unit not in table:
        raise ConfigurationError(f"{where}: unknown {kind} unit {unit!r} (expected one of {', '.join(table)})")
    return value * table[unit]


def _parse_bool(text, where):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigurationError(f"{where}: expected a boolean, got {text!r}")


def _parse_value(text, key, where):
    kind = key.kind
    try:
        if kind == "str":
            value = text.strip()
        elif kind == "int":
            value = int(text)
        elif kind == "float":
            value = float(text)
        elif kind == "bool":
            value = _parse_bool(text, where)
        elif kind == "list-str":
            value = tuple(s.strip() for s in text.split(",") if s.strip())
        elif kind == "list-int":
            value = tuple(int(s) for s in text.split(",") if s.strip())
        elif kind == "list-float":
            value = tuple(float(s) for s in text.split(",") if s.strip())
        elif kind.startswith("list-"):
            value = tuple(parse_quantity(s, kind[5:], where) for s in text.split(",") if s.strip())
        else:
            value = parse_quantity(text, kind, where)
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None
    if key.choices and value not in key.choices:
        raise ConfigurationError(f"{where}: {value!r} is not one of {', '.join(key.choices)}")
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigurationError(f"{where}: value must be finite")
    return value


@dataclass
class RunConfig:
    """Validated configuration; ``sections[name][key]`` holds a.u. values."""

    sections: dict
    source: str = ""
    path: Path | None = None
    raw: dict = field(default_factory=dict)

    @property
    def scenario(self):
        return self.sections["run"]["scenario"]

    def __getitem__(self, name):
        return self.sections[name]

    def has(self, name):
        return name in self.sections

    def digest(self):
        return hashlib.sha256(self.source.encode()).hexdigest()

    def replace(self, section, **values):
        """Copy with some already-converted values overridden."""
        secs = {k: dict(v) for k, v in self.sections.items()}
        secs.setdefault(section, {}).update(values)
        return RunConfig(secs, self.source, self.path, self.raw)

    def echo(self):
        """Plain-data view (a.u. values) for manifests."""
        return {
            name: {k: (list(v) if isinstance(v, tuple) else v) for k, v in sorted(sec.items())}
            for name, sec in sorted(self.sections.items())
        }


def parse_config(text, path=None):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed configuration: {exc}") from None
    sections, raw = {}, {}
    for name in parser.sections():
        if name not in SCHEMA:
            raise ConfigurationError(f"unknown section [{name}]")
        schema = SCHEMA[name]
        values, raw[name] = {}, {}
        for key, text_value in parser.items(name):
            if key not in schema:
                raise ConfigurationError(f"unknown key {key!r} in [{name}]")
            where = f"[{name}] {key}"
            values[key] = _parse_value(text_value, schema[key], where)
            raw[name][key] = text_value
            log.debug("%s = %s -> %r (atomic units)", where, text_value, values[key])
        for key, spec in schema.items():
            if key not in values:
                if spec.required:
                    raise ConfigurationError(f"missing required key {key!r} in [{name}]")
                # numeric defaults of dimensioned keys are stated in a.u.
                values[key] = spec.default
        sections[name] = values
    if "run" not in sections:
        raise ConfigurationError("missing [run] section")
    scenario = sections["run"]["scenario"]
    for need in REQUIRED_SECTIONS[scenario]:
        if need not in sections:
            raise ConfigurationError(f"scenario {scenario!r} needs a [{need}] section")
    cfg = RunConfig(sections, text, Path(path) if path else None, raw)
    _validate(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from None
    return parse_config(text, path)


def _validate(cfg):
    s = cfg.sections
    if "atom" in s:
        a = s["atom"]
        if a["potential"] == "soft-core" and (a["depth"] is None or a["width"] is None):
            raise ConfigurationError("[atom] soft-core potential needs depth and width")
        if a["l_max"] < 0 or a["n_elec"] < 1:
            raise ConfigurationError("[atom] l_max must be >= 0 and n_elec >= 1")
    if "grid" in s and (s["grid"]["n_points"] < 10 or s["grid"]["r_max"] <= 0):
        raise ConfigurationError("[grid] needs r_max > 0 and at least 10 points")
    if "pulse" in s and cfg.scenario in ("propagate", "pes", "intensity-scan", "analyze"):
        p = s["pulse"]
        for key in ("photon_energy", "duration"):
            if p[key] is None:
                raise ConfigurationError(f"[pulse] {key} is required")
        if p["intensity"] is None and cfg.scenario != "intensity-scan":
            raise ConfigurationError("[pulse] intensity is required")
    if "propagation" in s:
        pr = s["propagation"]
        if (pr["cap_radius"] is None) != (pr["cap_strength"] is None):
            raise ConfigurationError("[propagation] cap_radius and cap_strength go together")
    if cfg.scenario == "beam-volume":
        b = s["beam"]
        if (b["signal_file"] is None) == (b["signal_order"] is None):
            raise ConfigurationError("[beam] give exactly one of signal_file or signal_order")
    if cfg.scenario == "analyze":
        an = s["analysis"]
        if an["resonances"] is not None and len(an["resonances"]) % 3:
            raise ConfigurationError("[analysis] resonances are triples: energy_eV, lifetime_as, numerator")


def default_config_text(name):
    """Text of a bundled example configuration."""
    from importlib import resources

    try:
        return resources.files("tdcis.configs").joinpath(f"{name}.ini").read_text()
    except (FileNotFoundError, ModuleNotFoundError):
        raise ConfigurationError(f"no bundled configuration named {name!r}") from None
