"""Scenario execution behind the command-line interface.

Every scenario returns a :class:`RunResult`: a JSON-ready summary plus the
text files to write.  Nothing touches the disk until a scenario has
finished, so a failed run leaves no partial output behind.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import constants as C
from .errors import ConfigurationError, NumericalError

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    summary: dict
    files: dict = field(default_factory=dict)  # name -> text, or callable(path)
    inputs: dict = field(default_factory=dict)  # name -> sha256
    convergence: dict = field(default_factory=dict)


def _fmt_table(header, columns):
    lines = ["# " + " ".join(header)]
    for row in zip(*columns):
        lines.append(" ".join(f"{float(v):.17g}" for v in row))
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# --------------------------------------------------------------------------
# model and pulse construction


def build_model_from(cfg, n_points=None, e_cut=None):
    from .models import build_model

    a, g = cfg["atom"], cfg["grid"]
    return build_model(
        g["r_max"],
        n_points or g["n_points"],
        g["mapping"],
        a["potential"],
        Z=a["Z"],
        n_elec=a["n_elec"],
        depth=a["depth"],
        width=a["width"],
        l_max=a["l_max"],
        e_cut=e_cut or a["e_cut"],
        active=list(a["active"]) if a["active"] else None,
        coupling=a["coupling"],
        closed_shell=a["closed_shell"],
        l_multipole_max=a["l_multipole_max"],
    )


def pulse_from(cfg, intensity_au=None):
    from .propagator import Pulse

    p = cfg["pulse"]
    I = p["intensity"] if intensity_au is None else intensity_au
    return Pulse(math.sqrt(I), p["photon_energy"], p["duration"], p["phase"])


def _propagation(cfg):
    defaults = {
        "method": "rk4",
        "dt": 0.05,
        "krylov_dim": 12,
        "t_start": None,
        "t_end": None,
        "gauge": "velocity",
        "record_every": 20,
        "cap_radius": None,
        "cap_strength": None,
    }
    if cfg.has("propagation"):
        defaults.update(cfg["propagation"])
    return defaults


def _hamiltonian(cfg, model, gauge=None, cap=None):
    from .potential import AbsorbingPotential

    pr = _propagation(cfg)
    if cap is None and pr["cap_radius"] is not None:
        cap = AbsorbingPotential(pr["cap_radius"], pr["cap_strength"])
    return model.hamiltonian(gauge or pr["gauge"], cap)


# --------------------------------------------------------------------------
# propagate


def _propagate_core(cfg, n_points=None, e_cut=None, dt=None):
    from .propagator import PropagationPlan, propagate

    model = build_model_from(cfg, n_points, e_cut)
    pulse = pulse_from(cfg)
    pr = _propagation(cfg)
    t0 = pr["t_start"] if pr["t_start"] is not None else -3.0 * pulse.tau
    t1 = pr["t_end"] if pr["t_end"] is not None else 3.0 * pulse.tau
    plan = PropagationPlan(t0, t1, dt or pr["dt"], pr["method"], pr["krylov_dim"])
    H = _hamiltonian(cfg, model)
    traj = propagate(model.basis.ground(), plan, pulse, H, record_every=pr["record_every"])
    return model, pulse, plan, traj


def run_propagate(cfg):
    model, pulse, plan, traj = _propagate_core(cfg)
    st = traj.state
    pops = {c.label: st.channel_population(c.index) for c in model.basis.channels}
    summary = {
        "cis_dimension": model.basis.dim,
        "ionization_potential_eV": C.hartree_to_ev(model.ionization_potential),
        "steps": plan.n_steps,
        "final_norm": st.norm(),
        "ground_population": abs(st.alpha0) ** 2,
        "ionization": 1.0 - abs(st.alpha0) ** 2,
        "channel_populations": pops,
        "keldysh": _keldysh_or_none(pulse, model.ionization_potential),
    }
    return RunResult(summary, {"trajectory.dat": lambda path: _write_traj(path, traj)})


def _write_traj(path, traj):
    with open(path, "w") as fh:
        _write_traj_lines(fh, traj)


def _write_traj_lines(fh, traj):
    fh.write("# t_fs norm re_alpha0 im_alpha0 " + " ".join(f"pop_{l}" for l in traj.channel_labels) + "\n")
    for t, n, a, pops in zip(traj.times, traj.norm, traj.alpha0, traj.populations):
        cols = [C.au_to_fs(t), n, a.real, a.imag, *pops]
        fh.write(" ".join(f"{v:.17g}" for v in cols) + "\n")


def _keldysh_or_none(pulse, ip):
    from .analysis import keldysh

    if pulse.F0 == 0 or pulse.omega == 0 or ip <= 0:
        return None
    return keldysh(pulse.intensity, pulse.omega, ip)


# --------------------------------------------------------------------------
# pes


def _pes_core(cfg, intensity_au=None, n_points=None, e_cut=None, dt=None):
    """Propagate with splitting and assemble the spectrum; returns a dict."""
    from .pes import (
        SplittingConfig,
        Splitter,
        SpectrumGrid,
        angle_integrate,
        anisotropy,
        assemble_spectrum,
        find_peaks,
        peak_area,
        total_probability,
    )
    from .propagator import PropagationPlan, propagate

    model = build_model_from(cfg, n_points, e_cut)
    pulse = pulse_from(cfg, intensity_au)
    pr = _propagation(cfg)
    sp = cfg["splitting"]
    ip = model.ionization_potential
    t0 = pr["t_start"] if pr["t_start"] is not None else -3.0 * pulse.tau
    if pr["t_end"] is not None:
        T = pr["t_end"]
    else:
        p_slow = math.sqrt(2.0 * max(pulse.omega - ip, 0.1))
        T = 3.0 * pulse.tau + 2.0 * sp["r_c"] / p_slow
    first = sp["first"] if sp["first"] is not None else -1.5 * pulse.tau
    split_cfg = SplittingConfig.regular(sp["r_c"], sp["delta"], first, T, sp["cadence"])
    splitter = Splitter(model.basis, split_cfg)
    plan = PropagationPlan(t0, T, dt or pr["dt"], pr["method"], pr["krylov_dim"])
    H = _hamiltonian(cfg, model)
    traj = propagate(model.basis.ground(), plan, pulse, H, hooks=splitter.hooks(), record_every=10**9)
    p_max = sp["p_max"]
    if p_max is None:
        # room for the three-photon line plus half again for its tail
        p_max = 1.5 * math.sqrt(2.0 * max(3.0 * pulse.omega - ip, pulse.omega))
    mixing = sp["ion_mixing"]
    if mixing is None:
        mixing = cfg["atom"]["coupling"] == "interchannel"
    spec = SpectrumGrid.create(p_max, sp["n_p"], sp["n_theta"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        assemble_spectrum(splitter.segments, pulse, T, spec, model.dipole, mixing=mixing)
    E = spec.energy
    dPdE = angle_integrate(spec)
    half = sp["peak_half_width"] or 0.25 * pulse.omega
    expected = [n * pulse.omega - ip for n in (1, 2, 3) if n * pulse.omega - ip > 0 and n * pulse.omega - ip < E[-1]]
    found = find_peaks(E, dPdE, 1e-6)
    peaks = []
    for n, e_exp in enumerate(expected, start=1):
        near = found[np.abs(found - e_exp) < half] if found.size else found
        pos = float(near[np.argmin(np.abs(near - e_exp))]) if near.size else None
        area = peak_area(E, dPdE, e_exp, half)
        k = int(np.argmin(np.abs(E - (pos if pos is not None else e_exp))))
        beta, _ = anisotropy(spec.theta, spec.distribution()[k])
        peaks.append(
            {
                "photons": n,
                "expected_eV": C.hartree_to_ev(e_exp),
                "position_eV": None if pos is None else C.hartree_to_ev(pos),
                "area": area,
                "beta2": beta,
            }
        )
    return {
        "model": model,
        "pulse": pulse,
        "spectrum": spec,
        "traj": traj,
        "summary": {
            "cis_dimension": model.basis.dim,
            "ionization_potential_eV": C.hartree_to_ev(ip),
            "bandwidth_eV": C.hartree_to_ev(pulse.bandwidth),
            "final_time_fs": C.au_to_fs(T),
            "splits": len(splitter.segments),
            "ion_mixing": bool(mixing),
            "p_max": p_max,
            "absorbed_norm": 1.0 - traj.state.norm(),
            "spectrum_total": total_probability(spec),
            "ground_population": abs(traj.state.alpha0) ** 2,
            "peaks": peaks,
            "warnings": [str(w.message) for w in caught],
        },
    }


def run_pes(cfg):
    from functools import partial

    from .pes import write_energy_spectrum, write_spectrum

    out = _pes_core(cfg)
    spec = out["spectrum"]
    files = {
        "spectrum.dat": partial(write_spectrum, spectrum=spec),
        "energy_spectrum.dat": partial(write_energy_spectrum, spectrum=spec),
    }
    return RunResult(out["summary"], files)


# --------------------------------------------------------------------------
# intensity scan


def _scan_point(args):
    cfg, I = args
    out = _pes_core(cfg, intensity_au=I)
    return [p["area"] for p in out["summary"]["peaks"]], out["summary"]["absorbed_norm"]


def run_intensity_scan(cfg, threads=1):
    from .analysis import order_fit

    sc = cfg["scan"]
    intensities = list(sc["intensities"])
    jobs = [(cfg, I) for I in intensities]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(_scan_point, jobs))
    else:
        results = [_scan_point(j) for j in jobs]
    orders = list(sc["orders"])
    n_cols = min(len(orders), min(len(r[0]) for r in results))
    I_lab = [I * C.AU_INTENSITY_W_CM2 for I in intensities]
    cols = [[r[0][k] for r in results] for k in range(n_cols)]
    fits = {}
    for k in range(n_cols):
        try:
            f = order_fit((np.array(I_lab), np.array(cols[k])), orders[k])
            fits[f"peak_{k + 1}"] = {"order": orders[k], "slope": f.slope, "stderr": f.stderr}
        except ConfigurationError as exc:
            fits[f"peak_{k + 1}"] = {"order": orders[k], "error": str(exc)}
    header = ["intensity_Wcm2"] + [f"P_peak{k + 1}" for k in range(n_cols)] + ["absorbed_norm"]
    table = _fmt_table(header, [I_lab, *cols, [r[1] for r in results]])
    return RunResult({"intensities_Wcm2": I_lab, "fits": fits}, {"yields.dat": table})


# --------------------------------------------------------------------------
# siegert scan


def run_siegert_scan(cfg):
    from .potential import AbsorbingPotential
    from .siegert import diabatize, dressed_eigs, eta_plateau, scan_adiabatic

    sg = cfg["siegert"]
    model = build_model_from(cfg)
    H = model.hamiltonian("length", AbsorbingPotential(sg["cap_radius"], sg["cap_strength"]))
    F_grid = np.linspace(0.0, sg["field_max"], sg["n_fields"])
    scan, failures = scan_adiabatic(H, F_grid, sg["n_eigs"])
    if not scan:
        raise NumericalError("every field point of the adiabatic scan failed")
    track = diabatize(scan, floor=sg["overlap_floor"])
    files = {
        "track.dat": _fmt_table(
            ["F_au", "re_E_au", "im_E_au", "gamma_au", "overlap"],
            [track.F, track.energies.real, track.energies.imag, track.gammas, track.overlaps],
        )
    }
    lines = ["# F_au re_E_au im_E_au gamma_au overlap"]
    for F, states in scan:
        for s in states:
            lines.append(f"{F:.17g} {s.energy.real:.17g} {s.energy.imag:.17g} {s.gamma:.17g} {s.overlap:.17g}")
    files["scan.dat"] = "\n".join(lines) + "\n"
    summary = {
        "cis_dimension": model.basis.dim,
        "failures": [{"F": F, "error": str(e)} for F, e in failures],
        "flagged_fields": [float(track.F[k]) for k in track.flagged],
        "gamma_at_max_field": float(track.gammas[-1]),
        "stark_shift_at_max_field": float(track.energies.real[-1] - track.energies.real[0]),
    }
    if sg["eta_scan"]:
        F_eta = sg["eta_field"] if sg["eta_field"] is not None else sg["field_max"]
        gammas = []
        for eta in sg["eta_scan"]:
            Hk = model.hamiltonian("length", AbsorbingPotential(sg["cap_radius"], eta))
            best = max(dressed_eigs(Hk, F_eta, sg["n_eigs"]), key=lambda s: s.overlap)
            gammas.append(best.gamma)
        plateau = eta_plateau(np.array(gammas), np.array(sg["eta_scan"]))
        summary["eta_plateau"] = {k: v for k, v in plateau.items() if k not in ("etas", "gammas")}
        files["eta.dat"] = _fmt_table(["eta", "gamma_au"], [sg["eta_scan"], gammas])
    return RunResult(summary, files)


# --------------------------------------------------------------------------
# analysis


def run_analyze(cfg):
    from .analysis import (
        ResonanceModel,
        cross_section_from_yield,
        find_knees,
        fluence,
        multi_resonance_sigma2,
        ponderomotive,
        rate_solve,
    )

    an = cfg["analysis"]
    pulse = pulse_from(cfg)
    summary = {
        "ponderomotive_eV": C.hartree_to_ev(ponderomotive(pulse.intensity, pulse.omega)),
        "fluence_au": {N: fluence(pulse, N) for N in an["orders"]},
    }
    if an["ionization_potential"] is not None:
        summary["keldysh"] = _keldysh_or_none(pulse, an["ionization_potential"])
    files = {}
    cross = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for N in (1, 2):
            P = an[f"yield_{N}"]
            if P is not None:
                cross[N] = cross_section_from_yield(P, fluence(pulse, N), N)
    if cross:
        summary["cross_sections_cgs"] = cross
        summary["warnings"] = [str(w.message) for w in caught]
    sigmas = {N: C.cross_section_cgs_to_au(an[f"sigma_{N}"], N) for N in (1, 2) if an[f"sigma_{N}"] is not None}
    if sigmas:
        sol = rate_solve(sigmas, pulse, depletion=an["depletion"])
        step = max(1, sol.t.size // 2000)
        cols = [C.au_to_fs(sol.t[::step]), sol.ground[::step]] + [sol.yields[N][::step] for N in sorted(sigmas)]
        files["rates.dat"] = _fmt_table(["t_fs", "P0"] + [f"P_{N}" for N in sorted(sigmas)], cols)
        summary["final_yields"] = {N: sol.final(N) for N in sorted(sigmas)}
    if an["resonances"]:
        r = an["resonances"]
        model = ResonanceModel.from_lifetimes([tuple(r[k : k + 3]) for k in range(0, len(r), 3)])
        E = np.linspace(an["energy_min"], an["energy_max"], an["energy_points"])
        s2 = multi_resonance_sigma2(model, E)
        files["resonance.dat"] = _fmt_table(["E_eV", "sigma2_arb"], [E, s2])
        summary["resonance_peak_eV"] = float(E[np.argmax(s2)])
        summary["resonance_knees_eV"] = find_knees(E, s2)
        summary["resonance_widths_eV"] = [G for _, G, _ in model.resonances]
    return RunResult(summary, files)


# --------------------------------------------------------------------------
# beam volume


def beam_from(section):
    from .beam import BeamProfile

    return BeamProfile(section["w0"], section["z0"], section["n_phot"], section["z_min"], section["z_max"])


def volume_report(signal, beam, mc_samples=0, seed=0):
    from .beam import volume_signal, volume_signal_fluence_outer, volume_signal_monte_carlo

    value, conv = volume_signal(signal, beam, report=True)
    outer = volume_signal_fluence_outer(signal, beam)
    report = {
        "volume_signal": value,
        "fluence_outer": outer,
        "forms_relative_difference": abs(outer - value) / max(abs(value), 1e-300),
        "axial_refinement": conv,
        "peak_fluence": beam.max_fluence,
    }
    if mc_samples:
        mc, err = volume_signal_monte_carlo(signal, beam, n_samples=mc_samples, seed=seed)
        report["monte_carlo"] = {"value": mc, "stderr": err, "samples": mc_samples, "seed": seed}
    return report


def run_beam_volume(cfg, seed=0):
    from .beam import TabulatedSignal

    b = cfg["beam"]
    beam = beam_from(b)
    inputs = {}
    if b["signal_file"]:
        path = Path(b["signal_file"])
        if not path.is_absolute() and cfg.path is not None:
            path = cfg.path.parent / path
        if not path.exists():
            raise ConfigurationError(f"signal file {path} not found")
        signal = TabulatedSignal.read(path)
        inputs[str(b["signal_file"])] = sha256_file(path)
    else:
        c, N = b["signal_coefficient"], b["signal_order"]

        def signal(F):
            return c * np.asarray(F, dtype=float) ** N

    report = volume_report(signal, beam, b["mc_samples"], seed)
    return RunResult(report, {}, inputs)


# --------------------------------------------------------------------------
# convergence


def _observable(cfg, observable, **variant):
    if cfg.scenario == "pes" or observable == "yield":
        out = _pes_core(cfg, **variant)
        return out["summary"]["spectrum_total"] if observable == "yield" else out["summary"]["absorbed_norm"]
    _, _, _, traj = _propagate_core(cfg, **variant)
    st = traj.state
    if observable == "norm":
        return st.norm()
    return 1.0 - abs(st.alpha0) ** 2


def doubling_check(cfg, observable=None, tolerance=None):
    """Refine dt, the radial grid and the energy cutoff one at a time.

    Returns a report with the baseline value, each refined value, the
    relative change and whether that axis exceeds ``tolerance``.
    """
    if cfg.scenario not in ("propagate", "pes"):
        raise ConfigurationError("convergence checks apply to the propagate and pes scenarios")
    chk = cfg["check"] if cfg.has("check") else {"observable": "ionization", "tolerance": 1e-2}
    observable = observable or chk["observable"]
    tolerance = chk["tolerance"] if tolerance is None else tolerance
    pr = _propagation(cfg)
    base = _observable(cfg, observable)
    variants = {
        "dt": {"dt": 0.5 * pr["dt"]},
        "grid": {"n_points": 2 * cfg["grid"]["n_points"]},
        "e_cut": {"e_cut": 1.5 * cfg["atom"]["e_cut"]},
    }
    axes = {}
    for name, kw in variants.items():
        val = _observable(cfg, observable, **kw)
        rel = abs(val - base) / max(abs(base), 1e-300)
        axes[name] = {"value": val, "relative_change": rel, "flagged": bool(rel > tolerance)}
    return {
        "observable": observable,
        "baseline": base,
        "tolerance": tolerance,
        "axes": axes,
        "converged": not any(a["flagged"] for a in axes.values()),
    }


# --------------------------------------------------------------------------
# driver


def run_scenario(cfg, threads=1, seed=0):
    name = cfg.scenario
    if name == "propagate":
        return run_propagate(cfg)
    if name == "pes":
        return run_pes(cfg)
    if name == "intensity-scan":
        return run_intensity_scan(cfg, threads)
    if name == "siegert-scan":
        return run_siegert_scan(cfg)
    if name == "analyze":
        return run_analyze(cfg)
    if name == "beam-volume":
        return run_beam_volume(cfg, seed)
    raise ConfigurationError(f"unknown scenario {name!r}")


def manifest(cfg, result, extra=None):
    m = {
        "code_version": __version__,
        "scenario": cfg.scenario,
        "config_sha256": cfg.digest(),
        "config_lab_units": cfg.raw,
        "config_atomic_units": cfg.echo(),
        "inputs": result.inputs,
        "outputs": sorted(result.files),
        "convergence": result.convergence,
    }
    if extra:
        m.update(extra)
    return m


def write_outputs(out_dir, cfg, result, extra=None):
    """Single writer for every artifact of a run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in sorted(result.files.items()):
        if callable(content):
            content(out / name)
        else:
            (out / name).write_text(content)
    (out / "summary.json").write_text(dumps(result.summary))
    (out / "manifest.json").write_text(dumps(manifest(cfg, result, extra)))
    return out
