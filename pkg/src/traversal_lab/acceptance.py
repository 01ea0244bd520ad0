"""Built-in acceptance suite.

Each criterion is a standalone function returning a CriterionResult with the
measured numbers in `detail`, so both the CLI `check` subcommand and the
pytest suite run the identical checks at the identical tolerances. Working
points with a sideband exactly at the barrier top (or at zero energy) nudge
the incident energy up by one part in 1e9, the documented branch-point
treatment.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import NATURAL_UNITS, BarrierSpec, IncidentSpec, build_channels
from .nelson import forward_paths, plan_run, tau_nelson, transmitted_dwell_run
from .sideband import (
    flux_sum,
    full_matching_solve,
    leading_order_amplitudes,
    sideband_asymmetry,
    static_coefficients,
    traversal_time_from_visibility,
    visibility,
)
from .tdse import GridSpec, WavePacketSpec, free_gaussian, propagate
from .wkb import (
    gaussian_profile,
    rectangular_profile,
    turning_points,
    wkb_traversal_time,
    wkb_visibility,
)

MASTER_SEED = 20260810
NUDGE = 1.0 + 1e-9

E_GRID = (0.31, 0.52, 0.83, 1.27, 2.05)
V0_GRID = (0.6, 1.0, 1.55, 2.2, 3.1)
D_GRID_STATIC = (0.5, 1.0, 2.0, 3.0, 4.0)
D_GRID_DRIVEN = (0.5, 1.0, 1.8, 2.6, 3.4)


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    elapsed: float


def _textbook_transmission(energy, v0, d, units=NATURAL_UNITS):
    """|D0|^2 = 1/(1 + ((k^2+kappa^2)^2/(4 k^2 kappa^2)) sinh^2(kappa d))."""
    m, hbar = units.m, units.hbar
    k = complex(math.sqrt(2.0 * m * energy) / hbar)
    kap2 = 2.0 * m * (v0 - energy) / hbar**2
    kappa = np.sqrt(complex(kap2))
    val = 1.0 + ((k**2 + kappa**2) ** 2 / (4.0 * k**2 * kappa**2)) * np.sinh(kappa * d) ** 2
    return float((1.0 / val).real)


def criterion_1():
    """Static scattering exactness on a 5x5x5 (E, V0, d) grid."""
    worst_flux = 0.0
    worst_t = 0.0
    for energy in E_GRID:
        for v0 in V0_GRID:
            for d in D_GRID_STATIC:
                barrier = BarrierSpec.rectangular(v0, d)
                a0, d0 = static_coefficients(energy, barrier)
                worst_flux = max(worst_flux, abs(abs(a0) ** 2 + abs(d0) ** 2 - 1.0))
                worst_t = max(worst_t, abs(abs(d0) ** 2 - _textbook_transmission(energy, v0, d)))
    passed = worst_flux <= 1e-12 and worst_t <= 1e-10
    return passed, (f"max ||A0|^2+|D0|^2 - 1| = {worst_flux:.2e} (<=1e-12), "
                    f"max ||D0|^2 - closed form| = {worst_t:.2e} (<=1e-10)")


def criterion_2():
    """Leading-order sidebands converge to the full solve at O(V1^2)."""
    energy, v0, d, omega = 0.5, 1.0, 2.0, 0.08
    barrier0 = BarrierSpec.rectangular(v0, d)
    sol0 = full_matching_solve(energy, barrier0, n_eff=0)
    a0, d0 = static_coefficients(energy, barrier0)
    static_err = max(abs(sol0.A[0] - a0), abs(sol0.D[0] - d0))

    rel = {}
    for z in (0.02, 0.04, 0.08):
        barrier = BarrierSpec.rectangular(v0, d, v1=z * omega, omega=omega)
        sol = full_matching_solve(energy, barrier)
        channels = build_channels(IncidentSpec(energy), barrier)
        rel[z] = {}
        for n in (1, -1):
            _, d_lead = leading_order_amplitudes(n, energy, barrier, channels=channels)
            rel[z][n] = abs(d_lead - sol.D[n]) / abs(sol.D[n])
    ratios = [rel[0.04][n] / rel[0.02][n] for n in (1, -1)]
    ratios += [rel[0.08][n] / rel[0.04][n] for n in (1, -1)]
    passed = static_err <= 1e-12 and all(3.0 <= r <= 5.0 for r in ratios)
    return passed, (f"V1=0 reproduces statics to {static_err:.2e} (<=1e-12); "
                    f"halving ratios {[f'{r:.2f}' for r in ratios]} in [3,5]")


def criterion_3():
    """Unitarity of the converged full solve across the driven scan grid."""
    worst = 0.0
    for energy in E_GRID:
        omega = energy / 12.7
        v1 = 0.05 * omega
        for v0 in V0_GRID:
            for d in D_GRID_DRIVEN:
                barrier = BarrierSpec.rectangular(v0, d, v1=v1, omega=omega)
                sol = full_matching_solve(energy, barrier)
                worst = max(worst, abs(flux_sum(sol) - 1.0))
    passed = worst <= 1e-8
    return passed, f"max |flux sum - 1| = {worst:.2e} (<=1e-8)"


def criterion_4():
    """Sideband imbalance follows the tanh(omega*tau) crossover.

    tau = m d/(hbar kappa) = 4 at this opaque point. The match is assessed
    as an absolute deviation of the two bounded asymmetries (both live in
    [0, 1]); relative deviations are reported alongside.
    """
    energy = 0.5 * NUDGE
    v0, d, tau = 1.0, 4.0, 4.0
    details = []
    passed = True
    for omega_tau in (0.5, 1.0, 2.0):
        omega = omega_tau / tau
        barrier = BarrierSpec.rectangular(v0, d, v1=0.05 * omega, omega=omega)
        sol = full_matching_solve(energy, barrier)
        asym = sideband_asymmetry(sol)
        target = math.tanh(omega_tau)
        abs_dev = abs(asym - target)
        passed &= abs_dev <= 0.05
        details.append(f"wt={omega_tau}: {asym:.4f} vs tanh {target:.4f} "
                       f"(|diff| {abs_dev:.4f}, rel {abs_dev / target:+.3f})")
    return passed, "; ".join(details) + " (|diff|<=0.05)"


def criterion_5():
    """Visibility matches the opaque sinh form and recovers tau = d."""
    energy = 0.5 * NUDGE
    v0, d, tau = 1.0, 4.0, 4.0
    details = []
    passed = True
    for omega_tau in (0.3, 0.5, 1.0):
        omega = omega_tau / tau
        v1 = 0.05 * omega
        barrier = BarrierSpec.rectangular(v0, d, v1=v1, omega=omega)
        sol = full_matching_solve(energy, barrier)
        reading = visibility(sol)
        sinh_form = (2.0 * v1 / omega) * math.sinh(omega_tau)
        rel_vis = abs(reading.I_vis - sinh_form) / sinh_form
        est = traversal_time_from_visibility(reading.I_vis, v1, omega)
        rel_tau = abs(est.tau - tau) / tau
        passed &= rel_vis <= 0.10 and rel_tau <= 0.10
        details.append(f"wt={omega_tau}: I_vis {reading.I_vis:.5f} vs sinh "
                       f"{sinh_form:.5f} ({rel_vis:+.3f}), tau {est.tau:.3f} ({rel_tau:+.3f})")
    return passed, "; ".join(details) + " (both <=10%)"


def criterion_6():
    """WKB: exact rectangular transit, quadrature stability, opaque collapse."""
    worst_rect = 0.0
    for energy, v0, d in ((0.5, 1.0, 2.0), (0.5, 2.5, 3.0), (0.9, 1.3, 1.7)):
        prof = rectangular_profile(v0, d)
        kappa = math.sqrt(2.0 * (v0 - energy))
        worst_rect = max(worst_rect, abs(wkb_traversal_time(prof, energy) - d / kappa))

    prof = gaussian_profile(1.0, a=1.0)
    tau_adaptive = wkb_traversal_time(prof, 0.5)
    x1, x2 = turning_points(prof, 0.5)
    theta = (np.arange(1_000_000) + 0.5) * (math.pi / 2 / 1_000_000)
    xg = x1 + (x2 - x1) * np.sin(theta) ** 2
    integrand = (x2 - x1) * np.sin(2 * theta) / np.sqrt(2.0 * np.clip(prof(xg) - 0.5, 1e-300, None))
    tau_fixed = float(integrand.sum() * (math.pi / 2 / 1_000_000))
    quad_rel = abs(tau_adaptive - tau_fixed) / tau_fixed

    opaque = gaussian_profile(1.0, a=10.0)
    sol = wkb_visibility(opaque, 0.5, v1=0.05 * 0.01, omega=0.01)
    s0 = sol.S[0]
    collapse_rel = abs(sol.I_vis - sol.I_vis_opaque) / sol.I_vis_opaque

    passed = worst_rect <= 1e-8 and quad_rel <= 1e-6 and s0 <= 1e-3 and collapse_rel <= 0.02
    return passed, (f"rect transit err {worst_rect:.2e} (<=1e-8); gaussian quadrature "
                    f"agreement {quad_rel:.2e} (<=1e-6); S0={s0:.2e}, sinh-vs-Sigma "
                    f"{collapse_rel:.4f} (<=0.02)")


def criterion_7():
    """Propagation quality: norm conservation and free-packet dispersion."""
    barrier = BarrierSpec.rectangular(1.0, 2.0)
    plan = plan_run(0.5, barrier, settle=40.0)
    field = propagate(plan.packet, barrier, plan.grid, stride=plan.stride)
    drift = float(np.max(np.abs(field.norms - field.norms[0])))

    packet = WavePacketSpec(x0=-20.0, sigma=5.0, k0=1.0)
    grid = GridSpec(x_lo=-62.0, x_hi=62.0, n_x=8192, dt=0.005, n_t=1600)
    free = propagate(packet, None, grid, stride=160)
    psi_exact = free_gaussian(grid.x, grid.t_final, packet)
    max_err = float(np.max(np.abs(free.psi[-1] - psi_exact)))

    passed = drift <= 1e-8 and max_err <= 1e-4
    return passed, (f"barrier-run norm drift {drift:.2e} (<=1e-8); free-packet max "
                    f"wavefunction error {max_err:.2e} (<=1e-4)")


def _ks_distance(samples, x, rho):
    cdf = np.cumsum(rho)
    cdf = cdf / cdf[-1]
    emp = np.sort(samples)
    theory = np.interp(emp, x, cdf)
    n = emp.size
    up = np.abs(np.arange(1, n + 1) / n - theory)
    dn = np.abs(np.arange(0, n) / n - theory)
    return float(max(up.max(), dn.max()))


def criterion_8():
    """Path-ensemble fidelity: KS distance to |psi|^2 and the noise contract."""
    packet = WavePacketSpec(x0=-20.0, sigma=5.0, k0=1.0)
    grid = GridSpec(x_lo=-60.0, x_hi=60.0, n_x=4096, dt=0.01, n_t=1600)
    field = propagate(packet, None, grid, stride=4)
    probes = [4.0, 10.0, 16.0]
    ens = forward_paths(field, 100_000, MASTER_SEED, region_ii=(0.0, 0.0),
                        record_times=probes)
    worst_ks = 0.0
    for j, t in enumerate(probes):
        rho = field.density(field.snap_at(t))
        ks = _ks_distance(ens.positions[:, j], grid.x, rho)
        worst_ks = max(worst_ks, ks)

    from .nelson import _path_noise

    target = 1.0 * 0.01 / 1.0  # hbar dt / m
    draws = np.concatenate([_path_noise(MASTER_SEED, i, 250_000, math.sqrt(target))[1]
                            for i in range(4)])
    var_rel = abs(float(np.var(draws)) - target) / target
    passed = worst_ks <= 0.01 and var_rel <= 0.01
    return passed, (f"max KS over 3 probe times = {worst_ks:.4f} (<=0.01, 1e5 paths); "
                    f"noise variance off by {var_rel:.4f} (<=0.01, 1e6 draws)")


def criterion_9():
    """Headline opaque point: tau_Nelson and tau_vis against m d/(hbar kappa) = 2."""
    energy, v0, d = 0.5, 1.0, 2.0
    omega, z = 0.2, 0.05
    barrier = BarrierSpec.rectangular(v0, d, v1=z * omega, omega=omega)
    sol = full_matching_solve(energy, barrier)
    reading = visibility(sol)
    est = traversal_time_from_visibility(reading.I_vis, barrier.modulation_amplitude,
                                         omega)
    vis_rel = abs(est.tau - 2.0) / 2.0

    plan = plan_run(energy, barrier.static(), dt=0.01, n_x=8192)
    _, ensemble = transmitted_dwell_run(energy, barrier, 6000, MASTER_SEED, plan=plan)
    mean, stderr, n_used = tau_nelson(ensemble)
    nelson_rel = abs(mean - 2.0) / 2.0

    passed = vis_rel <= 0.10 and nelson_rel <= 0.15 and n_used >= 5000
    return passed, (f"tau_vis = {est.tau:.4f} ({vis_rel:+.3f} of 2, <=10%); tau_Nelson = "
                    f"{mean:.4f} +- {stderr:.4f} over {n_used} paths ({nelson_rel:+.3f} of 2, <=15%)")


def criterion_10():
    """Translucent point: visibility tracks the path ensemble better than WKB."""
    energy, v0, d = 0.5, 0.75, 3.0
    omega, z = 0.1, 0.05
    barrier = BarrierSpec.rectangular(v0, d, v1=z * omega, omega=omega)
    sol = full_matching_solve(energy, barrier)
    reading = visibility(sol)
    est = traversal_time_from_visibility(reading.I_vis, barrier.modulation_amplitude, omega)
    tau_wkb = wkb_traversal_time(rectangular_profile(v0, d), energy)

    plan = plan_run(energy, barrier.static(), dt=0.01, n_x=8192)
    _, ensemble = transmitted_dwell_run(energy, barrier, 6000, MASTER_SEED + 1, plan=plan)
    mean, stderr, n_used = tau_nelson(ensemble)

    gap_vis = abs(est.tau - mean)
    gap_wkb = abs(tau_wkb - mean)
    separated = gap_vis + 2.0 * stderr < gap_wkb - 2.0 * stderr
    passed = gap_vis < gap_wkb and separated
    return passed, (f"tau_vis {est.tau:.3f}, tau_wkb {tau_wkb:.3f}, tau_Nelson "
                    f"{mean:.3f} +- {stderr:.3f} ({n_used} paths); |vis-N| = {gap_vis:.3f} "
                    f"< |wkb-N| = {gap_wkb:.3f} with 2-stderr separation: {separated}")


CRITERIA = {
    1: ("static scattering exactness", criterion_1),
    2: ("leading-order vs full-solve convergence", criterion_2),
    3: ("unitarity of the full solve", criterion_3),
    4: ("tanh crossover of the sideband imbalance", criterion_4),
    5: ("visibility pipeline at the opaque point", criterion_5),
    6: ("WKB transit and damping consistency", criterion_6),
    7: ("propagation norm and dispersion quality", criterion_7),
    8: ("path-ensemble distributional fidelity", criterion_8),
    9: ("opaque headline comparison", criterion_9),
    10: ("translucent ordering of the three estimates", criterion_10),
}

LEVELS = {"quick": range(1, 7), "standard": range(1, 9), "full": range(1, 11)}


def run_criterion(index: int) -> CriterionResult:
    name, fn = CRITERIA[index]
    start = time.perf_counter()
    passed, detail = fn()
    return CriterionResult(index=index, name=name, passed=passed, detail=detail,
                           elapsed=time.perf_counter() - start)


def run_criteria(level="full"):
    return [run_criterion(i) for i in LEVELS[level]]
