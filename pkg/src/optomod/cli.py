"""Command-line interface.

Exit codes: 0 success, 1 acceptance criteria failed (validate only),
2 invalid config, 3 numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import kernels
from .classical import find_periodic_orbit
from .constants import format_constants
from .covariance import routh_hurwitz_stable, steady_periodic_covariance
from .errors import ConfigError, InvalidParameterError, OptomodError
from .metrics import period_extrema
from .params import Config, derive, load_config
from .perturbative import classical_orders, covariance_orders, coefficient_table
from .sweep import connectivity_report, emit, emit_phase, phase_sweep, sweep2d

EXIT_OK, EXIT_CRITERIA, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


def _config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    run = {}
    if args.samples is not None:
        if args.samples < 8:
            raise ConfigError("--samples must be >= 8")
        run["n_samples"] = args.samples
    if args.workers is not None:
        run["workers"] = args.workers
    return cfg.with_run(**run) if run else cfg


def _formats(args):
    return tuple(args.format) if args.format else ("csv", "svg", "gnuplot")


def cmd_steady(args, cfg: Config) -> int:
    dp = derive(cfg.system)
    mod = cfg.modulation
    r = cfg.run
    opts = dict(rtol=r["rtol"], settle_tol=r["settle_tol"], min_periods=r["min_settle_periods"],
                max_periods=r["max_settle_periods"])
    orbit = find_periodic_orbit(dp, cfg.system, mod, int(r["n_samples"]), **opts)
    cov = steady_periodic_covariance(dp, cfg.system, mod, int(r["n_samples"]), orbit=orbit,
                                     coupling=r["drift_coupling"],
                                     interpolation=r["interpolation"], **opts)
    summary = period_extrema(cov, r["discord_measured"])
    out = {"metrics": summary.to_dict(), "settle_time": max(orbit.settle_time, cov.settle_time),
           "config": cfg.to_dict()}
    text = json.dumps(out, indent=2, default=float)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "steady.json").write_text(text + "\n")
        orbit.to_csv(d / "orbit.csv")
        cov.to_csv(d / "covariance.csv")
    print(text)
    return EXIT_OK


def cmd_sweep2d(args, cfg: Config) -> int:
    grid, cells = sweep2d(cfg, int(cfg.run["workers"]))
    files = emit(grid, cells, cfg, args.out or ".", "sweep2d", _formats(args))
    counts = {s: sum(c.status == s for c in cells) for s in ("ok", "unstable", "non-converged")}
    isolated = connectivity_report(grid, cells)
    print(json.dumps({"cells": grid.size, **counts, "isolated_unstable": isolated,
                      "files": [str(f) for f in files]}))
    return EXIT_OK


def cmd_phase(args, cfg: Config) -> int:
    ps = phase_sweep(cfg, workers=int(cfg.run["workers"]))
    files = emit_phase(ps, cfg, args.out or ".", "phase", _formats(args))
    print(json.dumps({"points": ps.grid.size, "files": [str(f) for f in files]}))
    return EXIT_OK


def cmd_perturb(args, cfg: Config) -> int:
    dp = derive(cfg.system)
    if args.paper_table:
        print(coefficient_table(dp, cfg.system, args.order))
        return EXIT_OK
    mod = cfg.modulation
    cl = classical_orders(dp, cfg.system, mod, args.order)
    cv = covariance_orders(dp, cfg.system, mod, cl, args.order,
                           coupling=cfg.run["drift_coupling"])
    out = {"classical": {c: cl.series(c).to_dict() for c in ("q", "p", "a_re", "a_im")},
           "covariance": {f"C{i}{j}": cv.entry(i, j).to_dict()
                          for i in range(1, 5) for j in range(i, 5)},
           "n_phon": cv.phonons().to_dict()}
    text = json.dumps(out, indent=1)
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "series.json").write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_stability(args, cfg: Config) -> int:
    dp = derive(cfg.system)
    orbit = find_periodic_orbit(dp, cfg.system, cfg.modulation, int(cfg.run["n_samples"]))
    rep = routh_hurwitz_stable(dp, cfg.system, cfg.modulation, orbit, cfg.run["drift_coupling"])
    print(json.dumps(rep.to_dict()))
    return EXIT_OK


def cmd_validate(args, cfg: Config) -> int:
    from .acceptance import run_all
    results = run_all(cfg, int(cfg.run["workers"]))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failing: {', '.join(failed)}" if failed else ""))
    return EXIT_CRITERIA if failed else EXIT_OK


COMMANDS = {"steady": cmd_steady, "sweep2d": cmd_sweep2d, "phase": cmd_phase,
            "perturb": cmd_perturb, "stability": cmd_stability, "validate": cmd_validate}


def _common_flags(default):
    # subcommands use SUPPRESS so flags given before the subcommand are kept
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=default, help="JSON config file")
    common.add_argument("--out", default=default, help="output directory")
    common.add_argument("--workers", type=int, default=default,
                        help="worker processes for sweeps")
    common.add_argument("--samples", type=int, default=default,
                        help="samples per modulation period")
    common.add_argument("--format", action="append", choices=("csv", "svg", "gnuplot"),
                        default=default, help="output format (repeatable; default all)")
    return common


def build_parser() -> argparse.ArgumentParser:
    top = _common_flags(None)
    common = _common_flags(argparse.SUPPRESS)
    p = argparse.ArgumentParser(prog="optomod", parents=[top],
                                description="Modulated optomechanics: asymptotic Gaussian "
                                            "states, sweeps and perturbative series")
    p.add_argument("--constants", action="store_true",
                   help="print the physical constants compiled into the package and exit")
    sub = p.add_subparsers(dest="command")
    sub.add_parser("steady", parents=[common], help="metrics for one configuration")
    sub.add_parser("sweep2d", parents=[common], help="(Omega, epsilon) heatmaps")
    sub.add_parser("phase", parents=[common], help="relative-phase sweep")
    pp = sub.add_parser("perturb", parents=[common], help="perturbative series")
    pp.add_argument("--paper-table", action="store_true",
                    help="print the epsilon-graded coefficient tables")
    pp.add_argument("--order", type=int, default=2, help="perturbative order (<= 6)")
    sub.add_parser("stability", parents=[common], help="Routh-Hurwitz report")
    sub.add_parser("validate", parents=[common], help="run the acceptance checks")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.constants:
        print(format_constants())
        print(f"backend: {kernels.BACKEND_NAME}")
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG
    try:
        cfg = _config(args)
        for note in cfg.unit_notes:
            print(f"# {note}", file=sys.stderr)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args, cfg)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OptomodError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
