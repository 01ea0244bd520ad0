"""Kernel lane selection: compiled extension when available, NumPy otherwise.

Set TRAVERSAL_LAB_NO_EXT=1 to force the pure-Python lane (used by the
benchmark and the lane-equivalence tests).
"""

import logging
import os

import numpy as np

from . import _kernels_py

logger = logging.getLogger(__name__)

if os.environ.get("TRAVERSAL_LAB_NO_EXT"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py
        logger.info("compiled kernels unavailable, using NumPy fallback")


def backend() -> str:
    """Name of the active kernel lane ('cython' or 'python')."""
    return _impl.BACKEND


def get_impl(name: str | None = None):
    """Return a kernel module by lane name (None selects the active lane)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown kernel lane: {name!r}")


def cn_propagate(psi0, v_pot, dx, dt, m, hbar, n_steps, stride, impl=None):
    """Run the Crank-Nicolson loop; returns (snapshots, norms, edge_max).

    n_steps must be divisible by stride so the final state is snapshotted.
    """
    if n_steps % stride != 0:
        raise ValueError("n_steps must be divisible by stride")
    impl = impl if impl is not None else _impl
    psi = np.array(psi0, dtype=np.complex128)
    n_snap = n_steps // stride + 1
    snaps = np.empty((n_snap, psi.size), dtype=np.complex128)
    norms = np.empty(n_steps + 1, dtype=np.float64)
    edge_max = impl.cn_propagate_into(
        psi,
        np.ascontiguousarray(v_pot, dtype=np.float64),
        float(dx),
        float(dt),
        float(m),
        float(hbar),
        int(n_steps),
        int(stride),
        snaps,
        norms,
    )
    return snaps, norms, float(edge_max)


def em_paths(drift, dt_snap, x_lo, dx, x_first, noise, dt, x1, x2, rec_steps, impl=None):
    """Integrate a batch of Langevin paths; returns a dict of output arrays."""
    impl = impl if impl is not None else _impl
    x_first = np.ascontiguousarray(x_first, dtype=np.float64)
    noise = np.ascontiguousarray(noise, dtype=np.float64)
    rec_steps = np.ascontiguousarray(rec_steps, dtype=np.int64)
    n_paths = x_first.size
    out = {
        "rec": np.full((n_paths, rec_steps.size), np.nan, dtype=np.float64),
        "dwell": np.empty(n_paths, dtype=np.float64),
        "last_le_x1": np.empty(n_paths, dtype=np.float64),
        "last_le_x2": np.empty(n_paths, dtype=np.float64),
        "first_le_x2": np.empty(n_paths, dtype=np.float64),
        "first_le_x1_after": np.empty(n_paths, dtype=np.float64),
        "exited": np.empty(n_paths, dtype=np.uint8),
        "final": np.empty(n_paths, dtype=np.float64),
    }
    impl.em_paths_into(
        np.ascontiguousarray(drift, dtype=np.float64),
        float(dt_snap),
        float(x_lo),
        float(dx),
        x_first,
        noise,
        float(dt),
        float(x1),
        float(x2),
        rec_steps,
        out["rec"],
        out["dwell"],
        out["last_le_x1"],
        out["last_le_x2"],
        out["first_le_x2"],
        out["first_le_x1_after"],
        out["exited"],
        out["final"],
    )
    return out
