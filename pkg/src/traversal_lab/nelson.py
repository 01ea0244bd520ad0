"""Stochastic-mechanics sample paths driven by a propagated wavefunction.

Paths follow dx = (u + v) dt + dw with osmotic velocity u = (hbar/m) Re
d/dx ln psi, current velocity v = (hbar/m) Im d/dx ln psi, and Gaussian
white noise of variance (hbar/m) dt. Runs are reproducible: path i draws
its initial point and all noise from a dedicated generator keyed by
(master seed, i), so results do not depend on batching or scheduling.

Transmitted-path statistics use the time-reversed diffusion: final points
are sampled from the transmitted lobe of |psi(., T)|^2 and integrated
backward with the reversed drift v - u, whose forward reading is exactly
the transmitted sub-ensemble of the forward process.

Two dwell conventions are recorded per path. `dwell_time` is the total
residence sum(dt, x(t) in [x1, x2]). `crossing_time` is the duration of the
final left-to-right passage: from the last moment the path touches the
incident side of the left edge to the last moment it is at or below the
right edge. Opaque-barrier theory (m d / (hbar kappa)) describes the
crossing time; total residence additionally counts every brief incursion
while the packet dwells against the wall and grows with the packet width.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import NATURAL_UNITS, BarrierSpec
from .errors import EmptyEnsembleError, InsufficientTransmissionError
from .tdse import GridSpec, WavePacketSpec, WaveField, propagate

logger = logging.getLogger(__name__)

DENSITY_FLOOR_REL = 1e-12
VELOCITY_CLAMP_FACTOR = 50.0
DEFAULT_BATCH = 4096


# ---------------------------------------------------------------------------
# velocity fields
# ---------------------------------------------------------------------------

def _log_derivative(psi, dx):
    """d/dx ln psi by the centered ratio (psi_{j+1}-psi_{j-1})/(2 dx psi_j)."""
    num = np.empty_like(psi)
    num[..., 1:-1] = (psi[..., 2:] - psi[..., :-2]) / (2.0 * dx)
    num[..., 0] = (psi[..., 1] - psi[..., 0]) / dx
    num[..., -1] = (psi[..., -1] - psi[..., -2]) / dx
    safe = np.abs(psi) > 0
    return np.where(safe, num / np.where(safe, psi, 1.0), 0.0)


def velocity_grids(field: WaveField, clamp_k0=None):
    """(u, v, clamped_nodes) on the snapshot grid.

    Nodes where |psi|^2 falls below DENSITY_FLOOR_REL of the global maximum
    carry numerically meaningless log-derivatives; their velocities are set
    to zero and counted. Everywhere else u and v are clamped to +-v_max with
    v_max = 50 hbar k0 / m (node neighbourhoods make ln psi diverge).
    """
    units = field.units
    k0 = clamp_k0 if clamp_k0 is not None else (field.packet.k0 if field.packet else 1.0)
    v_max = VELOCITY_CLAMP_FACTOR * units.hbar * k0 / units.m
    g = _log_derivative(field.psi, field.grid.dx)
    rho = np.abs(field.psi) ** 2
    dead = rho <= DENSITY_FLOOR_REL * rho.max()
    scale = units.hbar / units.m
    u = np.clip(np.where(dead, 0.0, scale * g.real), -v_max, v_max)
    v = np.clip(np.where(dead, 0.0, scale * g.imag), -v_max, v_max)
    n_clamped = int(dead.sum()) + int((np.abs(scale * g.real) > v_max).sum()) \
        + int((np.abs(scale * g.imag) > v_max).sum())
    return u, v, n_clamped


def velocities(field: WaveField, x, t):
    """Osmotic and current velocities (u, v) at (x, t), bilinear in both."""
    u_grid, v_grid, _ = velocity_grids(field)
    x = np.asarray(x, dtype=float)
    s = np.clip(t / field.dt_snap, 0, field.n_snap - 1 - 1e-12)
    i_s = int(s)
    ws = s - i_s
    r = np.clip((x - field.grid.x_lo) / field.grid.dx, 0, field.grid.n_x - 1 - 1e-12)
    jx = r.astype(int)
    wx = r - jx

    def bilin(g):
        g0 = g[i_s, jx] + wx * (g[i_s, jx + 1] - g[i_s, jx])
        g1 = g[min(i_s + 1, field.n_snap - 1), jx] + wx * (
            g[min(i_s + 1, field.n_snap - 1), jx + 1] - g[min(i_s + 1, field.n_snap - 1), jx])
        return g0 + ws * (g1 - g0)

    u, v = bilin(u_grid), bilin(v_grid)
    if u.ndim == 0:
        return float(u), float(v)
    return u, v


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PathEnsemble:
    """Struct-of-arrays record of one batch of sample paths.

    `seeds` holds the per-path sub-stream keys (spawn indices under
    `master_seed`). `positions` stores trajectories at `record_times`
    (empty when recording was disabled). Excluded paths (grid exits) stay in
    the arrays but are skipped by the statistics.
    """

    master_seed: int
    kind: str  # "forward" | "backward_transmitted"
    region_ii: tuple
    seeds: np.ndarray
    transmitted: np.ndarray
    dwell_time: np.ndarray
    crossing_time: np.ndarray
    excluded: np.ndarray
    final_position: np.ndarray
    record_times: np.ndarray
    positions: np.ndarray | None = None
    n_clamped_nodes: int = 0
    flags: tuple = field(default_factory=tuple)

    @property
    def n_paths(self) -> int:
        return self.seeds.size

    def usable(self) -> np.ndarray:
        return ~self.excluded

    def transmitted_mask(self) -> np.ndarray:
        return self.transmitted & ~self.excluded


def _path_noise(master_seed, index, n_draws, scale):
    """Initial-uniform and noise draws for one path's dedicated generator."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=master_seed,
                                                       spawn_key=(int(index),)))
    first = rng.uniform()
    increments = rng.standard_normal(n_draws)
    return first, increments * scale


def _sample_from_density(x, rho, mask, uniforms):
    """Inverse-CDF sampling of a gridded density restricted to mask."""
    w = np.where(mask, rho, 0.0)
    total = np.trapezoid(w, x)
    if total <= 0:
        raise InsufficientTransmissionError("restricted density has zero weight")
    cdf = np.cumsum(w)
    cdf = cdf / cdf[-1]
    return np.interp(uniforms, cdf, x), total


def _run_ensemble(field, drift, n_paths, rng_seed, region_ii, sample_mask,
                  time_reversed, record_times, dt_sde, impl, kind):
    grid = field.grid
    units = field.units
    x = grid.x
    dt_snap = field.dt_snap
    dt = dt_sde if dt_sde is not None else grid.dt
    n_steps = int(round(grid.t_final / dt))
    if abs(n_steps * dt - grid.t_final) > 1e-9 * grid.t_final:
        raise ValueError("SDE step must divide the propagation time")
    scale = math.sqrt(units.hbar * dt / units.m)

    if record_times is None:
        rec_steps = np.empty(0, dtype=np.int64)
    else:
        steps_real = np.asarray([int(round(t / dt)) for t in record_times], dtype=np.int64)
        if steps_real.size and (steps_real.min() < 0 or steps_real.max() > n_steps):
            raise ValueError("record times outside the run window")
        # the integration clock of a reversed run counts down from t_final
        rec_steps = np.unique(n_steps - steps_real if time_reversed else steps_real)
    n_rec = rec_steps.size

    rho0 = np.abs(field.psi[-1 if time_reversed else 0]) ** 2

    x1, x2 = region_ii
    seeds = np.arange(n_paths, dtype=np.int64)
    transmitted = np.zeros(n_paths, dtype=bool)
    dwell = np.zeros(n_paths)
    crossing = np.zeros(n_paths)
    excluded = np.zeros(n_paths, dtype=bool)
    final = np.zeros(n_paths)
    positions = np.full((n_paths, n_rec), np.nan) if n_rec else None

    batch = max(1, min(DEFAULT_BATCH, n_paths))
    for lo in range(0, n_paths, batch):
        hi = min(lo + batch, n_paths)
        nb = hi - lo
        uniforms = np.empty(nb)
        noise = np.empty((nb, n_steps))
        for i in range(nb):
            uniforms[i], noise[i] = _path_noise(rng_seed, lo + i, n_steps, scale)
        x_first, _ = _sample_from_density(x, rho0, sample_mask, uniforms)
        out = kernels.em_paths(drift, dt_snap, grid.x_lo, grid.dx, x_first, noise,
                               dt, x1, x2, rec_steps, impl=impl)
        dwell[lo:hi] = out["dwell"]
        excluded[lo:hi] = out["exited"].astype(bool)
        final[lo:hi] = out["final"]
        if time_reversed:
            # integration clock runs from T backwards; events read in reverse
            t_exit = out["first_le_x2"]
            t_entry = out["first_le_x1_after"]
            ok = (t_exit >= 0) & (t_entry >= 0)
            crossing[lo:hi] = np.where(ok, t_entry - t_exit, np.nan)
            transmitted[lo:hi] = True  # endpoint sampled in the transmitted lobe
        else:
            t_exit = out["last_le_x2"]
            t_entry = out["last_le_x1"]
            trans = out["final"] > x2
            ok = trans & (t_exit >= 0) & (t_entry >= 0) & (t_exit >= t_entry)
            crossing[lo:hi] = np.where(ok, t_exit - t_entry, np.nan)
            transmitted[lo:hi] = trans
        if n_rec:
            rec = out["rec"]
            positions[lo:hi] = rec[:, ::-1] if time_reversed else rec

    if time_reversed:
        rec_times = (n_steps - rec_steps[::-1]) * dt if n_rec else np.empty(0)
    else:
        rec_times = rec_steps * dt if n_rec else np.empty(0)

    _, _, n_clamped = velocity_grids(field)
    flags = ()
    n_exc = int(excluded.sum())
    if n_exc:
        flags = (f"excluded_paths={n_exc}",)
        logger.warning("%d/%d paths left the grid and were excluded", n_exc, n_paths)
    return PathEnsemble(
        master_seed=rng_seed, kind=kind, region_ii=(x1, x2), seeds=seeds,
        transmitted=transmitted, dwell_time=dwell, crossing_time=crossing,
        excluded=excluded, final_position=final, record_times=rec_times,
        positions=positions, n_clamped_nodes=n_clamped, flags=flags,
    )


def forward_paths(field: WaveField, n_paths, rng_seed, region_ii,
                  record_times=None, dt_sde=None, impl=None) -> PathEnsemble:
    """Sample paths of the forward diffusion started from |psi(., 0)|^2."""
    u, v, _ = velocity_grids(field)
    drift = np.ascontiguousarray(u + v)
    mask = np.ones(field.grid.n_x, dtype=bool)
    return _run_ensemble(field, drift, n_paths, rng_seed, region_ii, mask,
                         time_reversed=False, record_times=record_times,
                         dt_sde=dt_sde, impl=impl, kind="forward")


def backward_transmitted_paths(field: WaveField, n_paths, rng_seed, region_ii,
                               record_times=None, dt_sde=None, impl=None,
                               min_weight=1e-6) -> PathEnsemble:
    """Transmitted sub-ensemble via the time-reversed diffusion.

    Final positions are drawn from |psi(., T)|^2 restricted to the region
    beyond the right barrier edge; integrating the reversed drift (v - u)
    backward in time yields forward-read transmitted trajectories. Recorded
    positions and times are flipped so they read forward.
    """
    grid = field.grid
    x = grid.x
    x2 = region_ii[1]
    rho_t = np.abs(field.psi[-1]) ** 2
    mask = x > x2
    weight = float(np.trapezoid(np.where(mask, rho_t, 0.0), x))
    if weight < min_weight:
        raise InsufficientTransmissionError(
            f"transmitted weight {weight:.3e} below {min_weight:.0e}")
    u, v, _ = velocity_grids(field)
    # reversed clock tau = T - t: drift(tau) = -(v - u)(T - tau)
    drift = np.ascontiguousarray(-(v - u)[::-1])
    return _run_ensemble(field, drift, n_paths, rng_seed, region_ii, mask,
                         time_reversed=True, record_times=record_times,
                         dt_sde=dt_sde, impl=impl, kind="backward_transmitted")


def tau_nelson(ensemble: PathEnsemble, convention="crossing"):
    """Mean traversal time, its standard error, and the path count used.

    convention='crossing' averages the final left-to-right passage duration
    (the quantity that approaches m d/(hbar kappa) for opaque barriers);
    'residence' averages the total time spent inside the barrier region.
    """
    mask = ensemble.transmitted_mask()
    if convention == "crossing":
        vals = ensemble.crossing_time[mask]
        vals = vals[np.isfinite(vals)]
    elif convention == "residence":
        vals = ensemble.dwell_time[mask]
    else:
        raise ValueError("convention must be 'crossing' or 'residence'")
    n = vals.size
    if n == 0:
        raise EmptyEnsembleError("no usable transmitted paths")
    mean = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, stderr, n


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_ensemble_csv(ensemble: PathEnsemble, path):
    """One row per path: path_id, seed, transmitted, dwell_time."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["path_id", "seed", "transmitted", "dwell_time"])
        for i in range(ensemble.n_paths):
            w.writerow([i, int(ensemble.seeds[i]),
                        int(bool(ensemble.transmitted[i])),
                        format(float(ensemble.dwell_time[i]), ".12g")])


def save_trajectories_csv(ensemble: PathEnsemble, path, max_paths=None):
    """Wide CSV of recorded positions: t, x_000, x_001, ..."""
    if ensemble.positions is None:
        raise ValueError("ensemble was generated without trajectory recording")
    n = ensemble.n_paths if max_paths is None else min(max_paths, ensemble.n_paths)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x_{i:03d}" for i in range(n)])
        for j, t in enumerate(ensemble.record_times):
            w.writerow([format(float(t), ".12g")]
                       + [format(float(ensemble.positions[i, j]), ".12g") for i in range(n)])


# ---------------------------------------------------------------------------
# one-call pipeline for barrier runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NelsonPlan:
    """Auto-sized grid and packet for one transmitted-dwell run."""

    packet: WavePacketSpec
    grid: GridSpec
    stride: int
    region_ii: tuple


def plan_run(incident_energy, barrier: BarrierSpec, units=NATURAL_UNITS,
             sigma=None, dt=0.02, stride=5, settle=65.0, n_x=4096) -> NelsonPlan:
    """Size the window so both lobes separate and never touch the boundary.

    sigma defaults to 10/k0; the packet starts 6 sigma left of the barrier
    and the run lasts until the transmitted lobe is `settle` past the edge.
    """
    k0 = math.sqrt(2.0 * units.m * incident_energy) / units.hbar
    sigma = 10.0 / k0 if sigma is None else sigma
    if barrier.kind == "rectangular":
        x1, x2 = barrier.edges
    else:
        from .wkb import turning_points
        x1, x2 = turning_points(barrier.profile, incident_energy)
    x0 = x1 - 6.0 * sigma
    v0_speed = units.hbar * k0 / units.m
    t_final = (abs(x0) + x2) / v0_speed + settle
    sigma_t = sigma * math.sqrt(1.0 + (units.hbar * t_final / (2.0 * units.m * sigma**2)) ** 2)
    t_hit = (x1 - x0) / v0_speed
    travel = v0_speed * (t_final - t_hit)
    # window must hold the initial packet, the returning reflected lobe, and
    # the advancing transmitted lobe, all with an 8-sigma guard band
    x_lo = min(x1 - travel, x0) - 8.0 * sigma_t
    x_hi = x2 + travel + 8.0 * sigma_t
    n_t = int(round(t_final / dt))
    n_t -= n_t % stride
    grid = GridSpec(x_lo=x_lo, x_hi=x_hi, n_x=n_x, dt=dt, n_t=n_t)
    packet = WavePacketSpec(x0=x0, sigma=sigma, k0=k0)
    return NelsonPlan(packet=packet, grid=grid, stride=stride, region_ii=(x1, x2))


def transmitted_dwell_run(incident_energy, barrier: BarrierSpec, n_paths, rng_seed,
                          units=NATURAL_UNITS, plan: NelsonPlan | None = None,
                          record_times=None, impl=None, **plan_kw):
    """Propagate, generate backward transmitted paths, return (field, ensemble)."""
    if plan is None:
        plan = plan_run(incident_energy, barrier.static(), units, **plan_kw)
    field = propagate(plan.packet, barrier.static(), plan.grid, units,
                      stride=plan.stride, impl=impl)
    ensemble = backward_transmitted_paths(field, n_paths, rng_seed, plan.region_ii,
                                          record_times=record_times, impl=impl)
    return field, ensemble
