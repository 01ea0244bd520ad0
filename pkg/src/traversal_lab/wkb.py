"""Semiclassical traversal time and visibility for smooth single-bump barriers.

For a potential with one classically forbidden interval [x1, x2] at energy E,
the barrier attenuates each sideband by a damping factor
S_n = exp(-int_{x1}^{x2} kappa_n(x) dx) with kappa_n(x) the local decay
constant at the sideband energy, each integrated between its own turning
points. The +-1 sideband weights Sigma relative to the carrier fix the
visibility of the transmitted current, and the traversal time is the
kappa-weighted transit integral tau = (m/hbar) int dx / kappa_0(x).

Quadratures substitute x = x1 + (x2-x1) sin^2(theta), which removes the
inverse-square-root endpoint behaviour of the transit integrand and the
square-root zeros of the damping integrand, so adaptive quadrature converges
at spectral rates for smooth profiles.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import jv

from .core import NATURAL_UNITS, BarrierSpec
from .errors import QuadratureAccuracyError, UnsupportedTopologyError

logger = logging.getLogger(__name__)

TURNING_SCAN_POINTS = 8192
QUAD_REL_TOL = 1e-8
#: Opaqueness / weak-modulation warning thresholds for the visibility formula.
OPAQUE_S0_WARN = 0.1
MODULATION_WARN = 0.2


@dataclass(frozen=True)
class PotentialProfile:
    """Evaluable barrier profile on a finite domain.

    fn is vectorized over x. kind 'rectangular' marks profiles whose turning
    points and barrier integrals have exact constant-kappa forms (used to
    bypass root finding and quadrature); everything else is treated as smooth.
    """

    fn: object
    x_lo: float
    x_hi: float
    kind: str = "smooth"
    v0: float = 0.0
    d: float = 0.0

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    @property
    def is_rectangular(self):
        return self.kind == "rectangular"


def rectangular_profile(v0, d, pad=None) -> PotentialProfile:
    if v0 <= 0 or d <= 0:
        raise ValueError("rectangular profile needs v0 > 0 and d > 0")
    pad = 2.0 * d if pad is None else pad
    fn = lambda x: np.where(np.abs(x) <= d / 2.0, v0, 0.0)
    return PotentialProfile(fn=fn, x_lo=-d / 2.0 - pad, x_hi=d / 2.0 + pad,
                            kind="rectangular", v0=v0, d=d)


def gaussian_profile(v0, a=1.0, span=10.0) -> PotentialProfile:
    """Gaussian bump v0*exp(-x^2/(2 a^2)) on [-span*a, span*a]."""
    if v0 <= 0 or a <= 0:
        raise ValueError("gaussian profile needs v0 > 0 and a > 0")
    fn = lambda x: v0 * np.exp(-(x * x) / (2.0 * a * a))
    return PotentialProfile(fn=fn, x_lo=-span * a, x_hi=span * a, kind="gaussian")


def eckart_profile(v0, a=1.0, span=15.0) -> PotentialProfile:
    """Eckart bump v0/cosh^2(x/a) on [-span*a, span*a]."""
    if v0 <= 0 or a <= 0:
        raise ValueError("eckart profile needs v0 > 0 and a > 0")
    fn = lambda x: v0 / np.cosh(x / a) ** 2
    return PotentialProfile(fn=fn, x_lo=-span * a, x_hi=span * a, kind="eckart")


def profile_from_samples(xs, vs) -> PotentialProfile:
    """Monotone-cubic interpolation of sampled (x, V) pairs."""
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if xs.ndim != 1 or xs.size < 4 or xs.shape != vs.shape:
        raise ValueError("need matching 1-D arrays with at least 4 samples")
    if not np.all(np.diff(xs) > 0):
        raise ValueError("sample positions must be strictly increasing")
    interp = PchipInterpolator(xs, vs, extrapolate=False)
    fn = lambda x: np.nan_to_num(interp(x), nan=0.0)
    return PotentialProfile(fn=fn, x_lo=float(xs[0]), x_hi=float(xs[-1]), kind="sampled")


def load_profile_csv(path) -> PotentialProfile:
    """Profile from a two-column CSV table (x, V) with strictly increasing x."""
    xs, vs = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, v = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                continue  # header line
            xs.append(x)
            vs.append(v)
    return profile_from_samples(xs, vs)


def profile_of(barrier: BarrierSpec) -> PotentialProfile:
    """Profile view of a barrier spec."""
    if barrier.kind == "rectangular":
        return rectangular_profile(barrier.v0, barrier.d)
    return barrier.profile


def turning_points(profile: PotentialProfile, e_n):
    """Boundaries (x1, x2) of the unique interval where V(x) > E_n.

    A dense scan brackets the sign changes of V - E_n; each bracket is then
    polished by bisection (brentq). Exactly one forbidden interval is
    required; zero or multiple bumps above E_n are rejected.
    """
    if profile.is_rectangular:
        if e_n >= profile.v0:
            raise UnsupportedTopologyError("energy at or above the barrier top")
        if e_n <= 0:
            raise UnsupportedTopologyError("energy must be positive")
        return (-profile.d / 2.0, profile.d / 2.0)
    xs = np.linspace(profile.x_lo, profile.x_hi, TURNING_SCAN_POINTS + 1)
    f = profile(xs) - e_n
    if np.max(f) <= 0:
        raise UnsupportedTopologyError("no classically forbidden region at this energy")
    sign_change = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
    if len(sign_change) != 2:
        raise UnsupportedTopologyError(
            f"expected one forbidden interval, found {len(sign_change)} crossings"
        )
    roots = []
    for i in sign_change:
        roots.append(brentq(lambda x: float(profile(x) - e_n), xs[i], xs[i + 1],
                            xtol=1e-15, rtol=8.9e-16))
    x1, x2 = sorted(roots)
    for r in (x1, x2):
        resid = abs(float(profile(r)) - e_n)
        if resid > 1e-10 * abs(e_n):
            logger.warning("turning point residual %.2e at x=%.6g", resid, r)
    return (x1, x2)


def _barrier_integral(profile, e_n, x1, x2, weight, units):
    """Quadrature of weight(kappa_n) over [x1, x2] with the sin^2 substitution."""
    m, hbar = units.m, units.hbar
    width = x2 - x1

    def integrand(theta):
        s = math.sin(theta)
        x = x1 + width * s * s
        val = float(profile(x)) - e_n
        if val < 0.0:
            val = 0.0
        kappa = math.sqrt(2.0 * m * val) / hbar
        return weight(kappa) * width * math.sin(2.0 * theta)

    result, abserr = quad(integrand, 0.0, math.pi / 2.0, limit=200,
                          epsabs=1e-300, epsrel=QUAD_REL_TOL * 1e-2)
    if result != 0.0 and abserr / abs(result) > QUAD_REL_TOL:
        raise QuadratureAccuracyError(
            f"barrier quadrature reached {abserr / abs(result):.2e} relative error",
            achieved=abserr / abs(result),
        )
    return result


def damping_factor(profile: PotentialProfile, e_n, x1, x2, units=NATURAL_UNITS):
    """S_n = exp(-int kappa_n dx) across the forbidden interval of E_n."""
    if profile.is_rectangular:
        kappa = math.sqrt(2.0 * units.m * (profile.v0 - e_n)) / units.hbar
        return math.exp(-kappa * (x2 - x1))
    action = _barrier_integral(profile, e_n, x1, x2, lambda kap: kap, units)
    return math.exp(-action)


def wkb_traversal_time(profile: PotentialProfile, energy, units=NATURAL_UNITS):
    """Transit integral tau = (m/hbar) int_{x1}^{x2} dx / kappa_0(x).

    The integrand diverges like an inverse square root at smooth turning
    points (integrable); the substitution removes the divergence exactly.
    Rectangular profiles use the constant-kappa form m d/(hbar kappa).
    """
    m, hbar = units.m, units.hbar
    if profile.is_rectangular:
        if energy >= profile.v0:
            raise UnsupportedTopologyError("energy at or above the barrier top")
        kappa = math.sqrt(2.0 * m * (profile.v0 - energy)) / hbar
        return m * profile.d / (hbar * kappa)
    x1, x2 = turning_points(profile, energy)
    big = 1e300

    def inv_kappa(kappa):
        return (m / hbar) / kappa if kappa > 0 else big

    return _barrier_integral(profile, energy, x1, x2, inv_kappa, units)


def sigma_factors(s0, s_plus, s_minus):
    """Sideband weights Sigma_{+-1} relative to the carrier.

    Sigma = ((4 + S_0^2)/(4 + S_{+-1}^2)) * (S_{+-1}/S_0); in the opaque
    limit this reduces to S_{+-1}/S_0 = exp(+-omega*tau).
    """
    for s in (s0, s_plus, s_minus):
        if not 0.0 < s <= 1.0:
            raise ValueError("damping factors must lie in (0, 1]")
    sig_p = ((4.0 + s0 * s0) / (4.0 + s_plus * s_plus)) * (s_plus / s0)
    sig_m = ((4.0 + s0 * s0) / (4.0 + s_minus * s_minus)) * (s_minus / s0)
    return sig_p, sig_m


@dataclass(frozen=True)
class WkbSolution:
    """Damping factors, sideband weights, traversal time and visibility."""

    x1: float
    x2: float
    S: dict
    Sigma: dict
    tau_wkb: float
    I_vis: float
    I_vis_opaque: float
    flags: tuple = field(default_factory=tuple)


def wkb_visibility(profile: PotentialProfile, energy, v1, omega, units=NATURAL_UNITS):
    """Visibility of the transmitted current for a weakly modulated barrier.

    Returns the full solution record. I_vis is the magnitude of
    2 (J_1(z)/J_0(z)) (Sigma_-1 - Sigma_+1) with z = V1/(hbar*omega);
    I_vis_opaque is the deep-barrier reduction 2 z sinh(omega*tau). Warnings
    are attached when the barrier is not opaque (S_0 > 0.1) or the modulation
    is not small (z > 0.2).
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    hbar = units.hbar
    z = v1 / (hbar * omega)
    flags = []
    if z > MODULATION_WARN:
        flags.append("modulation_not_small")
        logger.warning("V1/(hbar omega) = %.3g exceeds %.2g", z, MODULATION_WARN)

    s = {}
    tps = {}
    for n in (-1, 0, 1):
        e_n = energy + n * hbar * omega
        try:
            tps[n] = turning_points(profile, e_n)
        except UnsupportedTopologyError:
            if n == 0:
                raise
            # sideband at or above the barrier top: no forbidden region, no damping
            s[n] = 1.0
            flags.append(f"sideband_{n:+d}_above_barrier")
            continue
        s[n] = damping_factor(profile, e_n, *tps[n], units=units)
    if not (s[-1] <= s[0] <= s[1]):
        raise AssertionError(f"damping factors out of order: {s}")
    if s[0] > OPAQUE_S0_WARN:
        flags.append("barrier_not_opaque")
        logger.warning("S_0 = %.3g exceeds %.2g; opaque formulas degrade", s[0], OPAQUE_S0_WARN)

    sig_p, sig_m = sigma_factors(s[0], s[1], s[-1])
    tau_wkb = wkb_traversal_time(profile, energy, units)
    if v1 == 0:
        i_vis = 0.0
        i_opaque = 0.0
    else:
        i_vis = abs(2.0 * (jv(1, z) / jv(0, z)) * (sig_m - sig_p))
        i_opaque = z * 2.0 * math.sinh(omega * tau_wkb)
    x1, x2 = tps[0]
    return WkbSolution(x1=x1, x2=x2, S=s, Sigma={1: sig_p, -1: sig_m},
                       tau_wkb=tau_wkb, I_vis=i_vis, I_vis_opaque=i_opaque,
                       flags=tuple(flags))


@dataclass(frozen=True)
class WkbTau:
    """Traversal time recovered from a visibility value.

    tau is the low-frequency form hbar*I_vis/(2 V1); tau_asinh the inverse
    hyperbolic variant, preferable once omega*tau is not small.
    """

    tau: float
    tau_asinh: float

    def __float__(self):
        return self.tau


def wkb_tau_from_visibility(i_vis, v1, omega, units=NATURAL_UNITS) -> WkbTau:
    if v1 <= 0:
        raise ZeroDivisionError("tau from visibility needs V1 > 0")
    if omega <= 0:
        raise ValueError("omega must be positive")
    hbar = units.hbar
    tau_lf = hbar * i_vis / (2.0 * v1)
    tau_asinh = math.asinh(hbar * omega * i_vis / (2.0 * v1)) / omega
    return WkbTau(tau=tau_lf, tau_asinh=tau_asinh)
