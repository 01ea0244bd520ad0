"""Shared physical types and sideband kinematics.

Conventions: a particle of mass m and energy E moves in 1-D against a barrier
V0(x) whose height is modulated by V1*cos(omega*t). The modulation couples
the incident wave to sidebands at E_n = E + n*hbar*omega. Open channels
(E_n > 0) carry wavenumber k_n = sqrt(2 m E_n)/hbar; under a rectangular
barrier of height V0 the decay constant is kappa_n = sqrt(2 m (V0-E_n))/hbar,
analytically continued to -i*sqrt(2 m (E_n-V0))/hbar above the top so that
exp(-kappa_n x) keeps decaying or propagates rightward.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jv

from .errors import BranchPointError, DegenerateChannelError

#: Relative Bessel-weight threshold used to pick the sideband truncation order.
BESSEL_CUTOFF = 1e-12
MAX_SIDEBANDS = 64


@dataclass(frozen=True)
class PhysicalUnits:
    """Mass and hbar; the default m = hbar = 1 is used throughout the tests."""

    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.m <= 0 or self.hbar <= 0:
            raise ValueError("m and hbar must be positive")


NATURAL_UNITS = PhysicalUnits()


@dataclass(frozen=True)
class BarrierSpec:
    """Static barrier plus harmonic modulation of its height.

    kind is 'rectangular' (height v0, width d, edges at +-d/2) or 'smooth'
    (profile: callable with x_lo/x_hi attributes). modulation_amplitude V1
    and modulation_frequency omega describe the time dependence.
    """

    kind: str
    v0: float = 0.0
    d: float = 0.0
    profile: object = None
    modulation_amplitude: float = 0.0
    modulation_frequency: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rectangular", "smooth"):
            raise ValueError(f"unknown barrier kind {self.kind!r}")
        if self.kind == "rectangular":
            if self.v0 <= 0 or self.d <= 0:
                raise ValueError("rectangular barrier needs v0 > 0 and d > 0")
        elif self.profile is None:
            raise ValueError("smooth barrier needs a profile")
        if self.modulation_amplitude < 0:
            raise ValueError("modulation amplitude must be >= 0")
        if self.modulation_amplitude > 0 and self.modulation_frequency <= 0:
            raise ValueError("modulated barrier needs omega > 0")

    @classmethod
    def rectangular(cls, v0, d, v1=0.0, omega=0.0):
        return cls(kind="rectangular", v0=v0, d=d,
                   modulation_amplitude=v1, modulation_frequency=omega)

    @classmethod
    def smooth(cls, profile, v1=0.0, omega=0.0):
        return cls(kind="smooth", profile=profile,
                   modulation_amplitude=v1, modulation_frequency=omega)

    @property
    def edges(self):
        """Geometric support of the rectangular barrier."""
        if self.kind != "rectangular":
            raise ValueError("edges defined for rectangular barriers only")
        return (-self.d / 2.0, self.d / 2.0)

    def potential_on(self, x):
        """Static potential V0(x) evaluated on an array of positions."""
        x = np.asarray(x, dtype=float)
        if self.kind == "rectangular":
            return np.where(np.abs(x) <= self.d / 2.0, self.v0, 0.0)
        return np.asarray(self.profile(x), dtype=float)

    def static(self):
        """Copy of this barrier with the modulation switched off."""
        return BarrierSpec(kind=self.kind, v0=self.v0, d=self.d, profile=self.profile)


@dataclass(frozen=True)
class IncidentSpec:
    """Monochromatic incident wave at energy E > 0."""

    energy: float
    units: PhysicalUnits = NATURAL_UNITS

    def __post_init__(self):
        if self.energy <= 0:
            raise ValueError("incident energy must be positive")

    @property
    def k0(self) -> float:
        return math.sqrt(2.0 * self.units.m * self.energy) / self.units.hbar


def sideband_energy(energy, n, omega, units=NATURAL_UNITS):
    """Energy of sideband n: E + n*hbar*omega."""
    return energy + n * units.hbar * omega


def wavenumber(e_n, units=NATURAL_UNITS):
    """Channel wavenumber sqrt(2 m E_n)/hbar.

    Positive energies give a real positive wavenumber; negative energies
    return the evanescent continuation i*sqrt(-2 m E_n)/hbar and must be
    excluded from channel sums by the caller. E_n = 0 is rejected.
    """
    if e_n == 0:
        raise DegenerateChannelError("channel energy is exactly zero")
    if e_n > 0:
        return complex(math.sqrt(2.0 * units.m * e_n) / units.hbar)
    return 1j * math.sqrt(-2.0 * units.m * e_n) / units.hbar


def decay_constant(e_n, v0, units=NATURAL_UNITS):
    """Decay constant sqrt(2 m (V0-E_n))/hbar for a rectangular barrier.

    Above the barrier top the analytic continuation -i*sqrt(2 m (E_n-V0))/hbar
    is returned, so exp(-kappa x) becomes a rightward-propagating oscillating
    mode. Exactly at the top the formulas downstream divide by kappa, so this
    is treated as an error; perturb the energy by ~1e-9 relative instead.
    """
    if e_n == v0:
        raise BranchPointError("channel energy equals the barrier height")
    if e_n < v0:
        return complex(math.sqrt(2.0 * units.m * (v0 - e_n)) / units.hbar)
    return -1j * math.sqrt(2.0 * units.m * (e_n - v0)) / units.hbar


@dataclass(frozen=True)
class Channel:
    n: int
    energy: float
    k: complex
    kappa: complex
    open: bool


@dataclass(frozen=True)
class ChannelSet:
    """Retained sideband channels n in [-n_eff, n_eff] with E_n > 0.

    Channels at E_n <= 0 are dropped entirely (their indices are kept in
    `dropped` for diagnostics). z = V1/(hbar*omega) is the Bessel argument
    of the modulation coupling.
    """

    n_eff: int
    z: float
    channels: tuple = field(default_factory=tuple)
    dropped: tuple = field(default_factory=tuple)

    def __getitem__(self, n) -> Channel:
        for ch in self.channels:
            if ch.n == n:
                return ch
        raise KeyError(n)

    def __contains__(self, n) -> bool:
        return any(ch.n == n for ch in self.channels)

    @property
    def ns(self):
        return tuple(ch.n for ch in self.channels)

    @property
    def open_ns(self):
        return tuple(ch.n for ch in self.channels if ch.open)


def nudged_energy(energy, barrier: BarrierSpec, units=NATURAL_UNITS, n_scan=64):
    """(energy', was_nudged): shift E up by 1e-9 relative when any sideband
    energy coincides exactly with the barrier top or with zero."""
    omega = barrier.modulation_frequency
    if omega <= 0 or barrier.kind != "rectangular":
        return energy, False
    hbar = units.hbar
    for n in range(-n_scan, n_scan + 1):
        e_n = energy + n * hbar * omega
        if e_n == barrier.v0 or e_n == 0.0:
            return energy * (1.0 + 1e-9), True
    return energy, False


def adaptive_n_eff(z: float) -> int:
    """Smallest N with |J_N(z)| below BESSEL_CUTOFF relative to |J_0(z)|."""
    if z == 0:
        return 0
    j0 = abs(jv(0, z))
    n = 0
    while n < MAX_SIDEBANDS and abs(jv(n, z)) >= BESSEL_CUTOFF * j0:
        n += 1
    return n


def build_channels(incident: IncidentSpec, barrier: BarrierSpec, n_eff=None) -> ChannelSet:
    """Kinematics of every retained sideband for a rectangular barrier."""
    if barrier.kind != "rectangular":
        raise ValueError("sideband channels are defined for rectangular barriers")
    units = incident.units
    omega = barrier.modulation_frequency
    v1 = barrier.modulation_amplitude
    z = v1 / (units.hbar * omega) if v1 > 0 else 0.0
    if n_eff is None:
        n_eff = adaptive_n_eff(z)
    channels = []
    dropped = []
    for n in range(-n_eff, n_eff + 1):
        e_n = sideband_energy(incident.energy, n, omega, units) if omega > 0 else incident.energy
        if n != 0 and omega == 0:
            continue
        if e_n <= 0:
            dropped.append(n)
            continue
        channels.append(
            Channel(
                n=n,
                energy=e_n,
                k=wavenumber(e_n, units),
                kappa=decay_constant(e_n, barrier.v0, units),
                open=True,
            )
        )
    return ChannelSet(n_eff=n_eff, z=z, channels=tuple(channels), dropped=tuple(dropped))
