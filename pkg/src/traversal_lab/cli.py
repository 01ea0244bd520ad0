"""Command-line driver.

Subcommands:
  scan     sweep one axis and tabulate traversal-time estimates (CSV + gnuplot)
  current  transmitted current over one modulation period at fixed parameters
  tbar     time-averaged transmission versus modulation frequency
  nelson   one transmitted-path ensemble with trajectory dump
  check    run the built-in acceptance suite

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import Config, load_config
from .core import BarrierSpec, PhysicalUnits, nudged_energy
from .errors import TraversalLabError

logger = logging.getLogger(__name__)


def _add_common(parser):
    parser.add_argument("--config", type=Path, help="key=value run configuration")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed override")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: TRAVERSAL_LAB_THREADS or 1)")
    parser.add_argument("--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="traversal-lab",
                                     description="Tunneling traversal-time laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("scan", "parameter scan comparing traversal-time methods"),
        ("current", "transmitted current over one modulation period"),
        ("tbar", "time-averaged transmission versus frequency"),
        ("nelson", "single stochastic-path ensemble with trajectory dump"),
        ("check", "run the acceptance suite"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "check":
            p.add_argument("--level", choices=("quick", "standard", "full"),
                           default="standard",
                           help="quick: fast numerics; standard: adds propagation "
                                "and ensemble checks; full: adds the headline runs")
    return parser


def _load(args) -> Config:
    if args.config is not None:
        cfg = load_config(args.config)
    else:
        cfg = Config()
    if args.seed is not None:
        cfg = cfg.merged({"nelson.seed": args.seed})
    return cfg


def _units(cfg: Config) -> PhysicalUnits:
    return PhysicalUnits(m=cfg.get_float("units.m", 1.0),
                         hbar=cfg.get_float("units.hbar", 1.0))


def _barrier(cfg: Config, require_modulation=False) -> BarrierSpec:
    v1 = cfg.get_float("barrier.V1", 0.0)
    omega = cfg.get_float("barrier.omega", 0.0)
    if require_modulation and (v1 <= 0 or omega <= 0):
        raise TraversalLabError("this command needs barrier.V1 > 0 and barrier.omega > 0")
    return BarrierSpec.rectangular(cfg.get_float("barrier.V0"), cfg.get_float("barrier.d"),
                                   v1=v1, omega=omega)


def cmd_scan(args) -> int:
    from .scanning import emit_csv, emit_plot_script, run_scan, spec_from_config

    cfg = _load(args)
    spec = spec_from_config(cfg)
    rows = run_scan(spec, threads=args.threads)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / "scan.csv"
    emit_csv(rows, csv_path)
    emit_plot_script(rows, args.out / "scan.gp", csv_path=csv_path.name,
                     title=f"traversal time vs {spec.axis}")
    print(f"wrote {csv_path} ({len(rows)} points)")
    return 0


def cmd_current(args) -> int:
    from .sideband import full_matching_solve, transmitted_current, visibility

    cfg = _load(args)
    units = _units(cfg)
    barrier = _barrier(cfg, require_modulation=True)
    energy = cfg.get_float("incident.E")
    n_samples = cfg.get_int("current.n_samples", 512)
    energy, nudged = nudged_energy(energy, barrier, units)
    if nudged:
        logger.warning("incident energy nudged off an exact sideband branch point")
    sol = full_matching_solve(energy, barrier, units)
    reading = visibility(sol)
    period = 2.0 * math.pi / barrier.modulation_frequency
    ts = np.linspace(0.0, period, n_samples + 1)
    vals = transmitted_current(sol, reading.L, ts)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "current.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,T\n")
        for t, v in zip(ts, vals):
            fh.write(f"{t:.12g},{v:.12g}\n")
    print(f"wrote {path}")
    print(f"I_vis = {reading.I_vis:.6g} (closed form {reading.I_vis_closed:.6g}) "
          f"at L = {reading.L:.6g}")
    return 0


def cmd_tbar(args) -> int:
    from .sideband import full_matching_solve, time_averaged_transmission

    cfg = _load(args)
    units = _units(cfg)
    energy = cfg.get_float("incident.E")
    v0 = cfg.get_float("barrier.V0")
    d = cfg.get_float("barrier.d")
    v1 = cfg.get_float("barrier.V1")
    lo = cfg.get_float("tbar.lo")
    hi = cfg.get_float("tbar.hi")
    n = cfg.get_int("tbar.n_points", 32)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "tbar.csv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("omega,T_bar\n")
        for omega in np.linspace(lo, hi, n):
            barrier = BarrierSpec.rectangular(v0, d, v1=v1, omega=float(omega))
            try:
                e_point, _ = nudged_energy(energy, barrier, units)
                sol = full_matching_solve(e_point, barrier, units)
                tbar = time_averaged_transmission(sol)
                fh.write(f"{omega:.12g},{tbar:.12g}\n")
            except TraversalLabError as exc:
                logger.warning("omega=%.6g failed: %s", omega, exc)
                fh.write(f"{omega:.12g},\n")
    print(f"wrote {path}")
    return 0


def cmd_nelson(args) -> int:
    from .nelson import (
        plan_run,
        save_ensemble_csv,
        save_trajectories_csv,
        tau_nelson,
        transmitted_dwell_run,
    )

    cfg = _load(args)
    units = _units(cfg)
    barrier = _barrier(cfg)
    energy = cfg.get_float("incident.E")
    n_paths = cfg.get_int("nelson.n_paths", 64)
    seed = cfg.get_int("nelson.seed", 12345)
    sigma = cfg.get_float("nelson.sigma") if cfg.get("nelson.sigma") else None
    plan = plan_run(energy, barrier.static(), units, sigma=sigma,
                    dt=cfg.get_float("nelson.dt", 0.02),
                    n_x=cfg.get_int("nelson.n_x", 4096))
    n_rec = cfg.get_int("nelson.n_record", 512)
    record = np.linspace(0.0, plan.grid.t_final, n_rec)
    field, ensemble = transmitted_dwell_run(energy, barrier, n_paths, seed, units,
                                            plan=plan, record_times=record)
    mean, stderr, n_used = tau_nelson(ensemble)
    args.out.mkdir(parents=True, exist_ok=True)
    save_ensemble_csv(ensemble, args.out / "ensemble.csv")
    save_trajectories_csv(ensemble, args.out / "trajectories.csv",
                          max_paths=min(16, n_paths))
    print(f"wrote {args.out / 'ensemble.csv'} and {args.out / 'trajectories.csv'}")
    print(f"tau_nelson = {mean:.4f} +- {stderr:.4f} over {n_used} transmitted paths "
          f"(barrier region {ensemble.region_ii})")
    return 0


def cmd_check(args) -> int:
    from .acceptance import run_criteria

    results = run_criteria(level=args.level)
    width = max(len(r.name) for r in results)
    all_pass = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        all_pass &= r.passed
        print(f"[{status}] {r.index:>2} {r.name:<{width}} ({r.elapsed:6.2f}s) {r.detail}")
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return 0 if all_pass else 1


COMMANDS = {
    "scan": cmd_scan,
    "current": cmd_current,
    "tbar": cmd_tbar,
    "nelson": cmd_nelson,
    "check": cmd_check,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads is not None:
        os.environ["TRAVERSAL_LAB_THREADS"] = str(args.threads)
    try:
        return COMMANDS[args.command](args)
    except TraversalLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
