"""Benchmark the numba-compiled kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--T 300] [--m 5] [--reps 50]

Times one filter pass and one FFBS pass per repetition at the shape of the
reference desk-scale fit (T=300, m around 5); numba compile time is excluded
by a warm-up call.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from goodwill import kernels


def make_system(T: int, m: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    F = rng.normal(size=(T, m))
    G = 0.9 * np.broadcast_to(np.eye(m), (T, m, m)).copy()
    G += 0.05 * rng.normal(size=(T, m, m))
    HWH = np.zeros((T, m, m))
    for t in range(T):
        A = 0.3 * rng.normal(size=(m, m))
        HWH[t] = A @ A.T + 0.01 * np.eye(m)
    V = rng.random(T) + 0.1
    y = rng.normal(size=T)
    obs = np.ones(T, bool)
    m0 = np.zeros(m)
    P0 = np.eye(m)
    z = rng.standard_normal((T + 1, m))
    return y, obs, F, G, HWH, V, m0, P0, z


def bench(kset: dict, args, reps: int) -> dict:
    y, obs, F, G, HWH, V, m0, P0, z = args
    fc, ffbs = kset["filter_core"], kset["ffbs_core"]
    out = fc(y, obs, F, G, HWH, V, m0, P0)  # warm-up (numba compiles here)
    am, aP, fm, fP = out[0], out[1], out[2], out[3]
    ffbs(G, am, aP, fm, fP, m0, P0, z)
    t0 = time.perf_counter()
    for _ in range(reps):
        fc(y, obs, F, G, HWH, V, m0, P0)
    t_filter = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        ffbs(G, am, aP, fm, fP, m0, P0, z)
    t_ffbs = (time.perf_counter() - t0) / reps
    return {"filter_ms": 1e3 * t_filter, "ffbs_ms": 1e3 * t_ffbs}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--T", type=int, default=300)
    ap.add_argument("--m", type=int, default=5)
    ap.add_argument("--reps", type=int, default=50)
    ns = ap.parse_args()

    args = make_system(ns.T, ns.m)
    numpy_res = bench(kernels.pure(), args, ns.reps)
    numba_res = bench(kernels.jitted(), args, ns.reps)

    print(f"T={ns.T} m={ns.m} reps={ns.reps}")
    print(f"{'kernel':<10}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for k in ("filter_ms", "ffbs_ms"):
        s = numpy_res[k] / numba_res[k]
        print(f"{k[:-3]:<10}{numpy_res[k]:>12.3f}{numba_res[k]:>12.3f}{s:>9.1f}x")


if __name__ == "__main__":
    main()
