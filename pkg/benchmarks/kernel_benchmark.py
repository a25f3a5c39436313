"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Times csr_spmm and jacobi_sweeps in both variants across a few problem
sizes and reports the speedup. Run:

    python benchmarks/kernel_benchmark.py
"""

import time

import numpy as np

from oversmooth.backend import HAVE_NUMBA
from oversmooth.graph import normalize_adjacency
from oversmooth.kernels import (
    csr_spmm_numba,
    csr_spmm_numpy,
    jacobi_sweeps_numba,
    jacobi_sweeps_numpy,
)


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def random_csr(rng, n, p):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j))
    return normalize_adjacency(edges, n)


def bench_spmm(rng):
    print("csr_spmm: normalized adjacency times a dense feature matrix")
    print(f"{'n':>6} {'d':>5} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>8}")
    for n, d, p in [(500, 64, 0.05), (2000, 64, 0.01), (2000, 256, 0.01),
                    (8000, 128, 0.002)]:
        offsets, cols, vals = random_csr(rng, n, p)
        h = rng.standard_normal((n, d))
        t_np = time_call(csr_spmm_numpy, offsets, cols, vals, h)
        if csr_spmm_numba is not None:
            csr_spmm_numba(offsets, cols, vals, h)  # compile before timing
            t_nb = time_call(csr_spmm_numba, offsets, cols, vals, h)
            print(f"{n:>6} {d:>5} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
                  f"{t_np / t_nb:>7.1f}x")
        else:
            print(f"{n:>6} {d:>5} {t_np * 1e3:>12.2f} {'n/a':>12} {'n/a':>8}")


def bench_jacobi(rng):
    print("\njacobi_sweeps: one-sided rotations to mutual column orthogonality")
    print(f"{'shape':>10} {'numpy (ms)':>12} {'numba (ms)':>12} {'speedup':>8}")
    for rows, cols in [(64, 32), (128, 64), (256, 128), (256, 256)]:
        w = rng.standard_normal((rows, cols))
        t_np = time_call(jacobi_sweeps_numpy, w.copy(), 1e-12, 60, repeats=3)
        if jacobi_sweeps_numba is not None:
            jacobi_sweeps_numba(w.copy(), 1e-12, 60)  # compile before timing
            t_nb = time_call(jacobi_sweeps_numba, w.copy(), 1e-12, 60, repeats=3)
            print(f"{rows}x{cols:>5} {t_np * 1e3:>12.2f} {t_nb * 1e3:>12.2f} "
                  f"{t_np / t_nb:>7.1f}x")
        else:
            print(f"{rows}x{cols:>5} {t_np * 1e3:>12.2f} {'n/a':>12} {'n/a':>8}")


def check_agreement(rng):
    """The two variants must agree to rounding before timing means anything."""
    if csr_spmm_numba is None:
        print("numba unavailable; benchmarking numpy fallbacks only\n")
        return
    offsets, cols, vals = random_csr(rng, 300, 0.05)
    h = rng.standard_normal((300, 32))
    a = csr_spmm_numpy(offsets, cols, vals, h)
    b = csr_spmm_numba(offsets, cols, vals, h)
    assert np.max(np.abs(a - b)) <= 1e-12

    w = rng.standard_normal((48, 24))
    wa, wb = w.copy(), w.copy()
    jacobi_sweeps_numpy(wa, 1e-12, 60)
    jacobi_sweeps_numba(wb, 1e-12, 60)
    sa = np.sort(np.linalg.norm(wa, axis=0))
    sb = np.sort(np.linalg.norm(wb, axis=0))
    assert np.max(np.abs(sa - sb)) <= 1e-10
    print("variant agreement verified (spmm exact, singular values to 1e-10)\n")


def main():
    rng = np.random.default_rng(0)
    print(f"numba available: {HAVE_NUMBA}\n")
    check_agreement(rng)
    bench_spmm(rng)
    bench_jacobi(rng)


if __name__ == "__main__":
    main()
