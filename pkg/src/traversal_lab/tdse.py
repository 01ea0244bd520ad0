"""Wave-packet propagation for the static barrier.

Crank-Nicolson stepping (Cayley form, tridiagonal solve per step) is
norm-preserving to roundoff and unconditionally stable; grid ends are
reflecting (Dirichlet), so runs must size the window large enough that
neither the reflected nor the transmitted lobe reaches a boundary. Snapshots
can be stored every step or strided; per-step norms are always recorded.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import NATURAL_UNITS, BarrierSpec
from .errors import StabilityError, WindowError

NORM_DRIFT_LIMIT = 1e-6
EDGE_DENSITY_LIMIT = 1e-10
#: Fraction of V0-E the packet momentum spread may reach before warning.
ENERGY_SPREAD_WARN = 0.25


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time grid for the propagation window."""

    x_lo: float
    x_hi: float
    n_x: int
    dt: float
    n_t: int

    def __post_init__(self):
        if self.x_hi <= self.x_lo:
            raise ValueError("x_hi must exceed x_lo")
        if self.n_x < 16 or self.n_t < 1 or self.dt <= 0:
            raise ValueError("invalid grid resolution")

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.n_x - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n_x)

    @property
    def t_final(self) -> float:
        return self.n_t * self.dt


@dataclass(frozen=True)
class WavePacketSpec:
    """Gaussian packet: center x0, position spread sigma, mean wavenumber k0."""

    x0: float
    sigma: float
    k0: float

    def __post_init__(self):
        if self.sigma <= 0 or self.k0 <= 0:
            raise ValueError("packet needs sigma > 0 and k0 > 0")


@dataclass(frozen=True)
class WaveField:
    """Propagated wavefunction snapshots plus per-step norms."""

    grid: GridSpec
    stride: int
    psi: np.ndarray  # complex [n_snap, n_x]
    norms: np.ndarray  # float [n_t + 1]
    units: object = NATURAL_UNITS
    packet: WavePacketSpec | None = None

    @property
    def n_snap(self) -> int:
        return self.psi.shape[0]

    @property
    def dt_snap(self) -> float:
        return self.grid.dt * self.stride

    @property
    def snap_times(self) -> np.ndarray:
        return np.arange(self.n_snap) * self.dt_snap

    def density(self, snap_index) -> np.ndarray:
        return np.abs(self.psi[snap_index]) ** 2

    def snap_at(self, t) -> int:
        """Index of the stored snapshot nearest to time t."""
        return int(round(t / self.dt_snap))


def gaussian_packet(x, packet: WavePacketSpec):
    """Initial Gaussian envelope with plane-wave carrier, unit L2 norm."""
    xi = np.asarray(x, dtype=float) - packet.x0
    norm = (2.0 * math.pi * packet.sigma**2) ** (-0.25)
    return norm * np.exp(-(xi**2) / (4.0 * packet.sigma**2) + 1j * packet.k0 * xi)


def free_gaussian(x, t, packet: WavePacketSpec, units=NATURAL_UNITS):
    """Closed-form free evolution of the Gaussian packet.

    Checked against high-precision quadrature of the free propagator; used
    as the dispersion oracle for the Crank-Nicolson stepping and for the
    analytic velocity fields.
    """
    m, hbar = units.m, units.hbar
    sigma, k0 = packet.sigma, packet.k0
    xi = np.asarray(x, dtype=float) - packet.x0
    tz = hbar * t / (2.0 * m * sigma**2)
    spread = 1.0 + 1j * tz
    norm = (2.0 * math.pi * sigma**2) ** (-0.25) / np.sqrt(spread)
    vt = hbar * k0 * t / m
    phase = np.exp(1j * (k0 * xi - hbar * k0**2 * t / (2.0 * m)))
    return norm * phase * np.exp(-((xi - vt) ** 2) / (4.0 * sigma**2 * spread))


def check_window(packet: WavePacketSpec, barrier, grid: GridSpec, units=NATURAL_UNITS):
    """Raise / warn on packet-grid mismatches before spending CPU time."""
    import warnings

    if packet.x0 - 4.0 * packet.sigma < grid.x_lo:
        raise WindowError("packet tail extends past the left grid boundary")
    if barrier is not None:
        energy = (units.hbar * packet.k0) ** 2 / (2.0 * units.m)
        if barrier.kind == "rectangular":
            left_edge = -barrier.d / 2.0
            v0 = barrier.v0
        else:
            v0 = float(np.max(barrier.profile(
                np.linspace(barrier.profile.x_lo, barrier.profile.x_hi, 1024))))
            from .errors import TraversalLabError
            from .wkb import turning_points

            try:
                left_edge = turning_points(barrier.profile, energy)[0]
            except (TraversalLabError, ValueError):
                left_edge = 0.0  # above-barrier or odd topology: no forbidden region
        if packet.x0 + 4.0 * packet.sigma >= left_edge:
            raise WindowError("packet is not initially confined to the incident region")
        spread = units.hbar**2 * packet.k0 / (units.m * 2.0 * packet.sigma)
        if v0 > energy and spread > ENERGY_SPREAD_WARN * (v0 - energy):
            warnings.warn("packet energy spread is not small against V0 - E; "
                          "stationary-scattering comparisons will degrade")
    points_per_wave = 2.0 * math.pi / packet.k0 / grid.dx
    if points_per_wave < 16.0:
        warnings.warn(f"carrier wavelength resolved by only {points_per_wave:.1f} points")


def propagate(packet: WavePacketSpec, barrier, grid: GridSpec,
              units=NATURAL_UNITS, stride=1, impl=None) -> WaveField:
    """Propagate the packet through the static barrier (barrier=None is free).

    The barrier must be static (no modulation); the time-periodic problem is
    handled by the sideband solver instead. Raises StabilityError on norm
    drift beyond 1e-6 and WindowError if probability reaches the grid ends.
    """
    if barrier is not None:
        if barrier.modulation_amplitude != 0:
            raise ValueError("propagation handles the static barrier only")
        if not isinstance(barrier, BarrierSpec):
            raise TypeError("barrier must be a BarrierSpec or None")
    check_window(packet, barrier, grid, units)
    x = grid.x
    v_pot = barrier.potential_on(x) if barrier is not None else np.zeros_like(x)
    psi0 = gaussian_packet(x, packet)
    psi0 /= math.sqrt(float(np.sum(np.abs(psi0) ** 2)) * grid.dx)

    snaps, norms, edge_max = kernels.cn_propagate(
        psi0, v_pot, grid.dx, grid.dt, units.m, units.hbar, grid.n_t, stride, impl=impl
    )
    drift = float(np.max(np.abs(norms - norms[0])))
    if drift > NORM_DRIFT_LIMIT:
        raise StabilityError(f"norm drift {drift:.3e} exceeds {NORM_DRIFT_LIMIT:.0e}")
    if edge_max > EDGE_DENSITY_LIMIT:
        raise WindowError(f"edge density {edge_max:.3e} exceeds {EDGE_DENSITY_LIMIT:.0e}; "
                          "enlarge the grid window")
    return WaveField(grid=grid, stride=stride, psi=snaps, norms=norms,
                     units=units, packet=packet)


def transmitted_probability(field: WaveField, x_right) -> float:
    """Probability beyond x_right in the final stored snapshot."""
    x = field.grid.x
    rho = field.density(-1)
    return float(np.sum(rho[x > x_right]) * field.grid.dx)


def save_field(field: WaveField, basepath):
    """Persist snapshots as raw little-endian float64 (re, im) pairs + JSON sidecar."""
    basepath = str(basepath)
    raw = np.empty(field.psi.shape + (2,), dtype="<f8")
    raw[..., 0] = field.psi.real
    raw[..., 1] = field.psi.imag
    raw.tofile(basepath + ".bin")
    meta = {
        "format": "complex128-le-re-im",
        "n_snap": field.n_snap,
        "n_x": field.grid.n_x,
        "grid": {
            "x_lo": field.grid.x_lo,
            "x_hi": field.grid.x_hi,
            "n_x": field.grid.n_x,
            "dt": field.grid.dt,
            "n_t": field.grid.n_t,
        },
        "stride": field.stride,
        "units": {"m": field.units.m, "hbar": field.units.hbar},
        "norms": field.norms.tolist(),
    }
    with open(basepath + ".json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=1)


def load_field(basepath) -> WaveField:
    from .core import PhysicalUnits

    basepath = str(basepath)
    with open(basepath + ".json", encoding="utf-8") as fh:
        meta = json.load(fh)
    grid = GridSpec(**meta["grid"])
    raw = np.fromfile(basepath + ".bin", dtype="<f8")
    raw = raw.reshape(meta["n_snap"], meta["n_x"], 2)
    psi = raw[..., 0] + 1j * raw[..., 1]
    return WaveField(
        grid=grid,
        stride=meta["stride"],
        psi=psi,
        norms=np.asarray(meta["norms"], dtype=float),
        units=PhysicalUnits(**meta["units"]),
    )
