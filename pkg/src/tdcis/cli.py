"""Command-line entry point: ``tdcis run|check|fit|volume``.

Exit status: 0 success, 2 configuration error, 3 numerical failure,
4 convergence check flagged at least one axis.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_UNCONVERGED = 4

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _limit_threads(n):
    # must run before numpy is imported to take effect on BLAS pools
    for var in _THREAD_VARS:
        os.environ[var] = str(n)


def _resolve_threads(arg):
    if arg is not None:
        return arg
    env = os.environ.get("TDCIS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SystemExit(f"TDCIS_THREADS must be an integer, got {env!r}") from None
    return 1


def build_parser():
    p = argparse.ArgumentParser(prog="tdcis", description="TDCIS photoionization engine")
    p.add_argument("--output-dir", type=Path, default=None, help="directory for result files")
    p.add_argument("--threads", type=int, default=None, help="worker count (env TDCIS_THREADS)")
    p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo estimates")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="execute the scenario named in a config file")
    r.add_argument("config", help="config path, or bundled:<name>")

    c = sub.add_parser("check", help="doubling check of dt, grid and energy cutoff")
    c.add_argument("config")
    c.add_argument("--observable", choices=("ionization", "norm", "yield"), default=None)
    c.add_argument("--tolerance", type=float, default=None)

    f = sub.add_parser("fit", help="log-log order fits of a yields table")
    f.add_argument("yields_file", type=Path)
    f.add_argument("--orders", default=None, help="comma-separated hypotheses per yield column")

    v = sub.add_parser("volume", help="focal-volume integral of a tabulated signal S(F)")
    v.add_argument("signal_file", type=Path)
    v.add_argument("--w0", type=float, required=True, help="waist (um)")
    v.add_argument("--z0", type=float, required=True, help="Rayleigh length (um)")
    v.add_argument("--n-phot", type=float, required=True, help="photons per pulse")
    v.add_argument("--z-min", type=float, default=None)
    v.add_argument("--z-max", type=float, default=None)
    v.add_argument("--mc", type=int, default=0, help="Monte Carlo samples for an independent estimate")
    return p


def _load(spec):
    from .config import default_config_text, load_config, parse_config

    if spec.startswith("bundled:"):
        name = spec.split(":", 1)[1]
        return parse_config(default_config_text(name), None)
    return load_config(spec)


def _out_dir(args, cfg=None):
    if args.output_dir is not None:
        return args.output_dir
    label = cfg["run"]["label"] if cfg is not None else args.verb
    return Path("tdcis-output") / label


def _cmd_run(args, threads):
    from .runner import dumps, run_scenario, write_outputs

    cfg = _load(args.config)
    result = run_scenario(cfg, threads=threads, seed=args.seed)
    out = write_outputs(_out_dir(args, cfg), cfg, result, {"seed": args.seed})
    sys.stdout.write(dumps(result.summary))
    logging.getLogger("tdcis").info("results written to %s", out)
    return EXIT_OK


def _cmd_check(args, threads):
    from .runner import RunResult, doubling_check, dumps, write_outputs

    cfg = _load(args.config)
    report = doubling_check(cfg, args.observable, args.tolerance)
    result = RunResult({"check": report}, convergence=report)
    write_outputs(_out_dir(args, cfg), cfg, result)
    sys.stdout.write(dumps(report))
    return EXIT_OK if report["converged"] else EXIT_UNCONVERGED


def _cmd_fit(args, threads):
    import numpy as np

    from .analysis import order_fit
    from .errors import ConfigurationError
    from .runner import dumps, sha256_file

    if not args.yields_file.exists():
        raise ConfigurationError(f"yields file {args.yields_file} not found")
    data = np.loadtxt(args.yields_file, comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ConfigurationError("yields file needs an intensity column and at least one yield column")
    n_cols = data.shape[1] - 1
    orders = [int(s) for s in args.orders.split(",")] if args.orders else list(range(1, n_cols + 1))
    fits = {}
    for k, N in enumerate(orders[:n_cols]):
        fit = order_fit((data[:, 0], data[:, k + 1]), N)
        fits[f"column_{k + 1}"] = {"order": N, "slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept}
    report = {"input_sha256": sha256_file(args.yields_file), "fits": fits}
    if args.output_dir is not None:
        args.output_dir.mkdir(parents=True, exist_ok=True)
        (args.output_dir / "fit.json").write_text(dumps(report))
    sys.stdout.write(dumps(report))
    return EXIT_OK


def _cmd_volume(args, threads):
    from .beam import BeamProfile, TabulatedSignal
    from .errors import ConfigurationError
    from .runner import dumps, sha256_file, volume_report

    if not args.signal_file.exists():
        raise ConfigurationError(f"signal file {args.signal_file} not found")
    signal = TabulatedSignal.read(args.signal_file)
    beam = BeamProfile(args.w0, args.z0, args.n_phot, args.z_min, args.z_max)
    report = volume_report(signal, beam, args.mc, args.seed)
    report["input_sha256"] = sha256_file(args.signal_file)
    if args.output_dir is not None:
        args.output_dir.mkdir(parents=True, exist_ok=True)
        (args.output_dir / "volume.json").write_text(dumps(report))
    sys.stdout.write(dumps(report))
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "check": _cmd_check, "fit": _cmd_fit, "volume": _cmd_volume}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s"
    )
    threads = _resolve_threads(args.threads)
    if "numpy" not in sys.modules:
        _limit_threads(threads)

    from .errors import ConfigurationError, NumericalError

    try:
        return COMMANDS[args.verb](args, threads)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
