"""Parameter scans comparing the three traversal-time estimates.

A scan sweeps one axis (barrier width, height ratio V0/E, or modulation
frequency) and evaluates any subset of {vis, wkb, nelson, asymmetry} per
point. Failures at single points are recorded in the row flags and the scan
continues. Points run data-parallel up to a thread budget; rows are merged
by axis index, so output never depends on scheduling.
"""

import concurrent.futures as cf
import csv
import io
import logging
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import Config
from .core import NATURAL_UNITS, BarrierSpec, PhysicalUnits, nudged_energy
from .errors import ConfigError, TraversalLabError
from .nelson import tau_nelson, transmitted_dwell_run
from .sideband import (
    full_matching_solve,
    sideband_asymmetry,
    time_averaged_transmission,
    traversal_time_from_visibility,
    visibility,
)
from .wkb import profile_of, wkb_traversal_time

logger = logging.getLogger(__name__)

CSV_HEADER = "axis,tau_vis,tau_wkb,tau_nelson,tau_nelson_stderr,I_vis,T_bar,asymmetry,flags"
VALID_METHODS = ("vis", "wkb", "nelson", "asymmetry")
VALID_AXES = ("width", "height_ratio", "frequency")
#: Default per-point seed spacing (odd, large; keeps sub-streams disjoint).
SEED_STRIDE = 2654435761


@dataclass(frozen=True)
class ScanSpec:
    """One scan: axis, range, fixed parameters, methods to evaluate."""

    axis: str
    lo: float
    hi: float
    n_points: int
    methods: tuple
    energy: float
    v0: float = 0.0
    d: float = 0.0
    v1: float = 0.0
    omega: float = 0.0
    units: PhysicalUnits = NATURAL_UNITS
    n_paths: int = 5000
    seed: int = 12345
    sigma: float | None = None
    dt: float = 0.02
    n_x: int = 4096

    def __post_init__(self):
        if self.axis not in VALID_AXES:
            raise ConfigError(f"axis must be one of {VALID_AXES}, got {self.axis!r}")
        if not self.methods:
            raise ConfigError("scan needs at least one method")
        for m in self.methods:
            if m not in VALID_METHODS:
                raise ConfigError(f"unknown method {m!r}; valid: {VALID_METHODS}")
        if not (self.lo < self.hi) or self.n_points < 2:
            raise ConfigError("scan range needs lo < hi and n_points >= 2")
        if self.energy <= 0:
            raise ConfigError("incident energy must be positive")
        needs_modulation = "vis" in self.methods or "asymmetry" in self.methods
        if needs_modulation and self.axis != "frequency" and (self.v1 <= 0 or self.omega <= 0):
            raise ConfigError("visibility/asymmetry methods need V1 > 0 and omega > 0")

    def axis_values(self):
        return np.linspace(self.lo, self.hi, self.n_points)


@dataclass(frozen=True)
class ScanRow:
    axis_value: float
    tau_vis: float | None = None
    tau_wkb: float | None = None
    tau_nelson: float | None = None
    tau_nelson_stderr: float | None = None
    I_vis: float | None = None
    T_bar: float | None = None
    asymmetry: float | None = None
    flags: str = ""


def spec_from_config(cfg: Config) -> ScanSpec:
    methods = tuple(cfg.get_list("scan.methods"))
    units = PhysicalUnits(m=cfg.get_float("units.m", 1.0), hbar=cfg.get_float("units.hbar", 1.0))
    return ScanSpec(
        axis=cfg.require("scan.axis"),
        lo=cfg.get_float("scan.lo"),
        hi=cfg.get_float("scan.hi"),
        n_points=cfg.get_int("scan.n_points"),
        methods=methods,
        energy=cfg.get_float("incident.E"),
        v0=cfg.get_float("barrier.V0", 0.0),
        d=cfg.get_float("barrier.d", 0.0),
        v1=cfg.get_float("barrier.V1", 0.0),
        omega=cfg.get_float("barrier.omega", 0.0),
        units=units,
        n_paths=cfg.get_int("nelson.n_paths", 5000),
        seed=cfg.get_int("nelson.seed", 12345),
        sigma=(cfg.get_float("nelson.sigma") if cfg.get("nelson.sigma") else None),
        dt=cfg.get_float("nelson.dt", 0.02),
        n_x=cfg.get_int("nelson.n_x", 4096),
    )


def _point_parameters(spec: ScanSpec, value):
    energy = spec.energy
    v0, d, omega = spec.v0, spec.d, spec.omega
    if spec.axis == "width":
        d = value
    elif spec.axis == "height_ratio":
        v0 = value * spec.energy
    else:
        omega = value
    if v0 <= 0 or d <= 0:
        raise ConfigError("scan point has no valid barrier (V0 and d must be positive)")
    barrier = BarrierSpec.rectangular(v0, d, v1=spec.v1, omega=omega)
    return energy, barrier


def evaluate_point(spec: ScanSpec, value) -> ScanRow:
    flags = []
    row = {}
    try:
        energy, barrier = _point_parameters(spec, value)
    except TraversalLabError as exc:
        return ScanRow(axis_value=float(value), flags=f"error:{exc}")
    units = spec.units

    if barrier.v0 > energy:
        kappa = math.sqrt(2.0 * units.m * (barrier.v0 - energy)) / units.hbar
        if math.exp(-kappa * barrier.d) > 0.1:
            flags.append("barrier_not_opaque")
    else:
        flags.append("above_barrier")

    if "vis" in spec.methods or "asymmetry" in spec.methods:
        try:
            e_solve, nudged = nudged_energy(energy, barrier, units)
            if nudged:
                flags.append("branch_nudged")
            sol = full_matching_solve(e_solve, barrier, units)
            flags.extend(sol.flags)
            row["T_bar"] = time_averaged_transmission(sol)
            if "vis" in spec.methods:
                reading = visibility(sol)
                flags.extend(f for f in reading.flags if f not in flags)
                row["I_vis"] = reading.I_vis
                est = traversal_time_from_visibility(
                    reading.I_vis, barrier.modulation_amplitude,
                    barrier.modulation_frequency, units)
                row["tau_vis"] = est.tau
                if not est.low_frequency_ok:
                    flags.append("omega_tau_large")
            if "asymmetry" in spec.methods:
                row["asymmetry"] = sideband_asymmetry(sol)
        except (TraversalLabError, ZeroDivisionError) as exc:
            flags.append(f"vis_error:{exc}")

    if "wkb" in spec.methods:
        try:
            row["tau_wkb"] = wkb_traversal_time(profile_of(barrier), energy, units)
        except TraversalLabError as exc:
            flags.append(f"wkb_error:{exc}")

    if "nelson" in spec.methods:
        try:
            point_seed = (spec.seed + SEED_STRIDE * int(round(1e6 * value))) % (2**63)
            _, ensemble = transmitted_dwell_run(
                energy, barrier, spec.n_paths, point_seed, units,
                sigma=spec.sigma, dt=spec.dt, n_x=spec.n_x)
            mean, stderr, n_used = tau_nelson(ensemble)
            row["tau_nelson"] = mean
            row["tau_nelson_stderr"] = stderr
            flags.extend(f for f in ensemble.flags if f not in flags)
            if n_used < spec.n_paths:
                flags.append(f"nelson_paths_used={n_used}")
        except TraversalLabError as exc:
            flags.append(f"nelson_error:{exc}")

    return ScanRow(axis_value=float(value), flags=";".join(flags), **row)


def run_scan(spec: ScanSpec, threads=None) -> list:
    """Evaluate every scan point; rows come back ordered by axis value."""
    if threads is None:
        threads = int(os.environ.get("TRAVERSAL_LAB_THREADS", "1"))
    values = spec.axis_values()
    if threads <= 1:
        return [evaluate_point(spec, v) for v in values]
    rows = [None] * len(values)
    with cf.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(evaluate_point, spec, v): i for i, v in enumerate(values)}
        for fut in cf.as_completed(futures):
            rows[futures[fut]] = fut.result()
    return rows


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return ""
    return format(float(value), ".12g")


def rows_to_csv_text(rows) -> str:
    if not rows:
        raise ValueError("no rows to emit")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER.split(","))
    for r in rows:
        w.writerow([
            _fmt(r.axis_value), _fmt(r.tau_vis), _fmt(r.tau_wkb), _fmt(r.tau_nelson),
            _fmt(r.tau_nelson_stderr), _fmt(r.I_vis), _fmt(r.T_bar), _fmt(r.asymmetry),
            r.flags,
        ])
    return buf.getvalue()


def emit_csv(rows, path):
    text = rows_to_csv_text(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    return path


def parse_csv(path) -> list:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER.split(","):
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            vals = [float(tok) if tok else None for tok in rec[:8]]
            rows.append(ScanRow(axis_value=vals[0], tau_vis=vals[1], tau_wkb=vals[2],
                                tau_nelson=vals[3], tau_nelson_stderr=vals[4],
                                I_vis=vals[5], T_bar=vals[6], asymmetry=vals[7],
                                flags=rec[8] if len(rec) > 8 else ""))
    return rows


_SERIES = (("tau_vis", 2, "visibility"), ("tau_wkb", 3, "WKB"), ("tau_nelson", 4, "Nelson"))


def emit_plot_script(rows, path, csv_path=None, title="traversal time"):
    """Write a self-contained gnuplot script plotting the available series."""
    if not rows:
        raise ValueError("no rows to plot")
    csv_path = csv_path if csv_path is not None else str(path).rsplit(".", 1)[0] + ".csv"
    have = {name: any(getattr(r, name) is not None for r in rows) for name, _, _ in _SERIES}
    plots = []
    for name, col, label in _SERIES:
        if not have[name]:
            continue
        if name == "tau_nelson":
            plots.append(f"'{csv_path}' using 1:{col}:{col + 1} with yerrorbars title '{label}'")
        else:
            plots.append(f"'{csv_path}' using 1:{col} with linespoints title '{label}'")
    if not plots:
        plots.append(f"'{csv_path}' using 1:6 with linespoints title 'visibility amplitude'")
    lines = [
        "#!/usr/bin/env gnuplot",
        "set datafile separator ','",
        "set key top left",
        f"set title '{title}'",
        "set xlabel 'scan axis'",
        "set ylabel 'traversal time'",
        "set term push",
        "set term dumb size 120,40",
        "plot " + ", \\\n     ".join(plots),
        "set term pop",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path
