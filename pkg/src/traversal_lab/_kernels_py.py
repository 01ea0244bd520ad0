"""Pure-NumPy implementations of the hot loops.

Selected automatically when the compiled extension is unavailable (or when
TRAVERSAL_LAB_NO_EXT is set). The Euler-Maruyama batch performs the same
floating-point operations in the same order as the compiled kernel, so the
two lanes produce identical trajectories; the Crank-Nicolson fallback uses a
prefactorized sparse LU instead of the Thomas recurrence and agrees with the
compiled lane to solver roundoff.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

BACKEND = "python"


def cn_propagate_into(psi, v_pot, dx, dt, m, hbar, n_steps, stride, snaps, norms):
    n = psi.shape[0]
    n_snap = snaps.shape[0]
    z = 1j * dt / (2.0 * hbar)
    a = z * (-(hbar**2) / (2.0 * m * dx * dx))
    kin = hbar**2 / (m * dx * dx)
    adia = 1.0 + z * (kin + v_pot)
    bdia = 2.0 - adia

    lhs = sp.diags(
        [np.full(n - 1, a), adia, np.full(n - 1, a)], [-1, 0, 1], format="csc"
    )
    lu = spla.splu(lhs)

    norms[0] = np.sum(psi.real**2 + psi.imag**2) * dx
    edge_max = max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2)
    snaps[0] = psi
    isnap = 1
    for s in range(1, n_steps + 1):
        rhs = bdia * psi
        rhs[:-1] -= a * psi[1:]
        rhs[1:] -= a * psi[:-1]
        psi[:] = lu.solve(rhs)
        norms[s] = np.sum(psi.real**2 + psi.imag**2) * dx
        edge_max = max(edge_max, abs(psi[0]) ** 2, abs(psi[-1]) ** 2)
        if s % stride == 0 and isnap < n_snap:
            snaps[isnap] = psi
            isnap += 1
    return edge_max


def em_paths_into(
    drift,
    dt_snap,
    x_lo,
    dx,
    x_first,
    noise,
    dt,
    x1,
    x2,
    rec_steps,
    rec_out,
    dwell_out,
    last_le_x1,
    last_le_x2,
    first_le_x2,
    first_le_x1_after,
    exited_out,
    final_out,
):
    n_paths = x_first.shape[0]
    n_steps = noise.shape[1]
    n_snap, n_x = drift.shape
    x_hi = x_lo + dx * (n_x - 1)

    x = x_first.copy()
    exited = np.zeros(n_paths, dtype=bool)
    dwell_out[:] = 0.0
    last_le_x1[:] = -1.0
    last_le_x2[:] = -1.0
    first_le_x2[:] = -1.0
    first_le_x1_after[:] = -1.0
    seen_x2 = x <= x2
    last_le_x1[x <= x1] = 0.0
    last_le_x2[seen_x2] = 0.0
    first_le_x2[seen_x2] = 0.0

    rec_steps = np.asarray(rec_steps)
    irec = 0
    if rec_steps.size > 0 and rec_steps[0] == 0:
        rec_out[:, 0] = x
        irec = 1

    for j in range(n_steps):
        t = j * dt
        ssn = t / dt_snap
        i_s = min(int(ssn), n_snap - 2)
        ws = ssn - i_s
        r = (x - x_lo) / dx
        jx = np.clip(r.astype(np.int64), 0, n_x - 2)
        wx = r - jx
        row0 = drift[i_s]
        row1 = drift[i_s + 1]
        g0 = row0[jx] + wx * (row0[jx + 1] - row0[jx])
        g1 = row1[jx] + wx * (row1[jx + 1] - row1[jx])
        b = g0 + ws * (g1 - g0)
        x = x + b * dt + noise[:, j]
        low = x < x_lo
        high = x > x_hi
        x[low] = x_lo
        x[high] = x_hi
        exited |= low | high

        tnow = (j + 1) * dt
        le1 = x <= x1
        le2 = x <= x2
        dwell_out[(x >= x1) & le2] += dt
        last_le_x1[le1] = tnow
        first_le_x1_after[le1 & seen_x2 & (first_le_x1_after < 0.0)] = tnow
        last_le_x2[le2] = tnow
        new2 = le2 & ~seen_x2
        first_le_x2[new2] = tnow
        seen_x2 |= le2
        if irec < rec_steps.size and rec_steps[irec] == j + 1:
            rec_out[:, irec] = x
            irec += 1

    exited_out[:] = exited
    final_out[:] = x
