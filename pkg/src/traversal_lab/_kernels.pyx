# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Crank-Nicolson stepping and Euler-Maruyama path batches.

Kept intentionally dumb: all allocation, RNG, and physics setup happen in
Python; these routines only run the inner loops. The NumPy fallback in
``_kernels_py`` implements the identical arithmetic in the identical order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def cn_propagate_into(
    cnp.complex128_t[::1] psi,
    double[::1] v_pot,
    double dx,
    double dt,
    double m,
    double hbar,
    long n_steps,
    long stride,
    cnp.complex128_t[:, ::1] snaps,
    double[::1] norms,
):
    """Advance psi in place through n_steps Crank-Nicolson steps.

    Snapshots are written every `stride` steps (step 0 included); norms is
    filled for every step. Returns the largest edge probability density seen,
    used by the caller to detect wave-packet contact with the grid ends.
    """
    cdef long n = psi.shape[0]
    cdef long n_snap = snaps.shape[0]
    cdef double complex z = 1j * dt / (2.0 * hbar)
    cdef double complex a = z * (-hbar * hbar / (2.0 * m * dx * dx))
    cdef double kin = hbar * hbar / (m * dx * dx)

    cdef cnp.ndarray[cnp.complex128_t, ndim=1] adia_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] bdia_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] cp_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] dinv_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] work_arr = np.empty(n, dtype=np.complex128)
    cdef cnp.complex128_t[::1] adia = adia_arr
    cdef cnp.complex128_t[::1] bdia = bdia_arr
    cdef cnp.complex128_t[::1] cp = cp_arr
    cdef cnp.complex128_t[::1] dinv = dinv_arr
    cdef cnp.complex128_t[::1] work = work_arr

    cdef long j, s, isnap
    cdef double complex denom, rhs
    cdef double nrm, edge_max, e0, e1

    with nogil:
        for j in range(n):
            adia[j] = 1.0 + z * (kin + v_pot[j])
            bdia[j] = 2.0 - adia[j]
        # Thomas forward-elimination coefficients (matrix constant over steps)
        cp[0] = a / adia[0]
        dinv[0] = 1.0 / adia[0]
        for j in range(1, n):
            denom = adia[j] - a * cp[j - 1]
            cp[j] = a / denom
            dinv[j] = 1.0 / denom

        nrm = 0.0
        for j in range(n):
            nrm += psi[j].real * psi[j].real + psi[j].imag * psi[j].imag
        norms[0] = nrm * dx
        e0 = psi[0].real * psi[0].real + psi[0].imag * psi[0].imag
        e1 = psi[n - 1].real * psi[n - 1].real + psi[n - 1].imag * psi[n - 1].imag
        edge_max = e0 if e0 > e1 else e1

        for j in range(n):
            snaps[0, j] = psi[j]
        isnap = 1

        for s in range(1, n_steps + 1):
            # rhs = B @ psi, then in-place tridiagonal solve A psi = rhs
            rhs = bdia[0] * psi[0] - a * psi[1]
            work[0] = rhs * dinv[0]
            for j in range(1, n - 1):
                rhs = -a * psi[j - 1] + bdia[j] * psi[j] - a * psi[j + 1]
                work[j] = (rhs - a * work[j - 1]) * dinv[j]
            rhs = -a * psi[n - 2] + bdia[n - 1] * psi[n - 1]
            work[n - 1] = (rhs - a * work[n - 2]) * dinv[n - 1]
            psi[n - 1] = work[n - 1]
            for j in range(n - 2, -1, -1):
                psi[j] = work[j] - cp[j] * psi[j + 1]

            nrm = 0.0
            for j in range(n):
                nrm += psi[j].real * psi[j].real + psi[j].imag * psi[j].imag
            norms[s] = nrm * dx
            e0 = psi[0].real * psi[0].real + psi[0].imag * psi[0].imag
            e1 = psi[n - 1].real * psi[n - 1].real + psi[n - 1].imag * psi[n - 1].imag
            if e0 > edge_max:
                edge_max = e0
            if e1 > edge_max:
                edge_max = e1

            if s % stride == 0 and isnap < n_snap:
                for j in range(n):
                    snaps[isnap, j] = psi[j]
                isnap += 1

    return edge_max


def em_paths_into(
    double[:, ::1] drift,
    double dt_snap,
    double x_lo,
    double dx,
    double[::1] x_first,
    double[:, ::1] noise,
    double dt,
    double x1,
    double x2,
    long[::1] rec_steps,
    double[:, ::1] rec_out,
    double[::1] dwell_out,
    double[::1] last_le_x1,
    double[::1] last_le_x2,
    double[::1] first_le_x2,
    double[::1] first_le_x1_after,
    cnp.uint8_t[::1] exited_out,
    double[::1] final_out,
):
    """Integrate a batch of Langevin paths against a precomputed drift grid.

    drift[s, i] is the drift at grid node i and integration-clock time
    s*dt_snap; it is bilinearly interpolated in (x, t). noise[p, j] must be
    pre-scaled increments of variance hbar*dt/m. Dwell accumulates dt per
    post-step position inside [x1, x2]. Four event times (integration clock,
    -1 when the event never occurs) record the last/first level crossings the
    dwell-statistics code needs; callers pick the ones matching their time
    direction.
    """
    cdef long n_paths = x_first.shape[0]
    cdef long n_steps = noise.shape[1]
    cdef long n_snap = drift.shape[0]
    cdef long n_x = drift.shape[1]
    cdef long n_rec = rec_steps.shape[0]
    cdef double x_hi = x_lo + dx * (n_x - 1)

    cdef long p, j, i_s, jx, irec
    cdef double x, t, ssn, ws, r, wx, g0, g1, b, tnow
    cdef bint exited, seen_x2

    with nogil:
        for p in range(n_paths):
            x = x_first[p]
            exited = 0
            dwell_out[p] = 0.0
            last_le_x1[p] = -1.0
            last_le_x2[p] = -1.0
            first_le_x2[p] = -1.0
            first_le_x1_after[p] = -1.0
            seen_x2 = 0
            if x <= x1:
                last_le_x1[p] = 0.0
            if x <= x2:
                last_le_x2[p] = 0.0
                first_le_x2[p] = 0.0
                seen_x2 = 1
            irec = 0
            if n_rec > 0 and rec_steps[0] == 0:
                rec_out[p, 0] = x
                irec = 1

            for j in range(n_steps):
                t = j * dt
                ssn = t / dt_snap
                i_s = <long>ssn
                if i_s > n_snap - 2:
                    i_s = n_snap - 2
                ws = ssn - i_s
                r = (x - x_lo) / dx
                jx = <long>r
                if jx < 0:
                    jx = 0
                elif jx > n_x - 2:
                    jx = n_x - 2
                wx = r - jx
                g0 = drift[i_s, jx] + wx * (drift[i_s, jx + 1] - drift[i_s, jx])
                g1 = drift[i_s + 1, jx] + wx * (drift[i_s + 1, jx + 1] - drift[i_s + 1, jx])
                b = g0 + ws * (g1 - g0)
                x = x + b * dt + noise[p, j]
                if x < x_lo:
                    x = x_lo
                    exited = 1
                elif x > x_hi:
                    x = x_hi
                    exited = 1

                tnow = (j + 1) * dt
                if x1 <= x <= x2:
                    dwell_out[p] += dt
                if x <= x1:
                    last_le_x1[p] = tnow
                    if seen_x2 and first_le_x1_after[p] < 0.0:
                        first_le_x1_after[p] = tnow
                if x <= x2:
                    last_le_x2[p] = tnow
                    if not seen_x2:
                        first_le_x2[p] = tnow
                        seen_x2 = 1
                if irec < n_rec and rec_steps[irec] == j + 1:
                    rec_out[p, irec] = x
                    irec += 1

            exited_out[p] = exited
            final_out[p] = x
