#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot loops (Crank-Nicolson stepping and Euler-Maruyama path
batches) on workloads representative of a headline barrier run, and verifies
that both lanes produce equivalent results while at it.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from traversal_lab.kernels import cn_propagate, em_paths, get_impl


def _time(fn, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_cn(lanes, n_x, n_steps, repeat):
    x = np.linspace(-150.0, 150.0, n_x)
    dx = x[1] - x[0]
    psi0 = np.exp(-((x + 60.0) ** 2) / 100.0 + 1j * x)
    psi0 /= np.sqrt((np.abs(psi0) ** 2).sum() * dx)
    v_pot = np.where(np.abs(x) <= 1.0, 1.0, 0.0)
    results = {}
    for name, impl in lanes.items():
        results[name] = _time(
            lambda impl=impl: cn_propagate(psi0, v_pot, dx, 0.02, 1.0, 1.0,
                                           n_steps, 10, impl=impl),
            repeat,
        )
    return results


def bench_em(lanes, n_paths, n_steps, repeat):
    rng = np.random.default_rng(0)
    drift = rng.normal(size=(n_steps // 10 + 1, 4096)) * 0.3
    x_first = rng.uniform(-40.0, -20.0, n_paths)
    noise = rng.normal(size=(n_paths, n_steps)) * np.sqrt(0.02)
    rec = np.array([0, n_steps // 2, n_steps], dtype=np.int64)
    results = {}
    for name, impl in lanes.items():
        results[name] = _time(
            lambda impl=impl: em_paths(drift, 0.2, -150.0, 300.0 / 4095, x_first,
                                       noise, 0.02, -1.0, 1.0, rec, impl=impl),
            repeat,
        )
    return results


def report(title, results):
    print(f"\n{title}")
    base = results.get("python", (float("nan"), None))[0]
    for name, (elapsed, _) in results.items():
        speedup = base / elapsed if elapsed > 0 else float("inf")
        print(f"  {name:8s} {elapsed * 1e3:9.1f} ms   ({speedup:4.1f}x vs python)")


def verify(cn_results, em_results):
    if "cython" not in cn_results:
        return
    snaps_c, norms_c, _ = cn_results["cython"][1]
    snaps_p, norms_p, _ = cn_results["python"][1]
    print(f"\nlane agreement: CN max|dpsi| = {np.max(np.abs(snaps_c - snaps_p)):.2e}", end="")
    out_c, out_p = em_results["cython"][1], em_results["python"][1]
    exact = all(np.array_equal(out_c[k], out_p[k], equal_nan=True) for k in out_c)
    print(f", EM bit-identical = {exact}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    lanes = {"python": get_impl("python")}
    try:
        lanes["cython"] = get_impl("cython")
    except ImportError:
        print("compiled extension not built; benchmarking the fallback only")

    n_steps = 1000 if args.quick else 5000
    n_paths = 1000 if args.quick else 8000
    repeat = 2 if args.quick else 3

    cn_results = bench_cn(lanes, n_x=4096, n_steps=n_steps, repeat=repeat)
    report(f"Crank-Nicolson stepping (n_x=4096, {n_steps} steps)", cn_results)
    em_results = bench_em(lanes, n_paths=n_paths, n_steps=n_steps, repeat=repeat)
    report(f"Euler-Maruyama paths ({n_paths} paths x {n_steps} steps)", em_results)
    verify(cn_results, em_results)


if __name__ == "__main__":
    main()
