"""Hot numeric kernels: CSR aggregation and one-sided Jacobi rotations.

Each kernel has a numba and a pure-numpy implementation; the public names
``csr_spmm`` and ``jacobi_sweeps`` dispatch on the selected backend (see
:mod:`oversmooth.backend`). Both variants are kept importable so the
benchmark suite can compare them head to head.
"""

from __future__ import annotations

import numpy as np

from .backend import HAVE_NUMBA, USE_NUMBA


def csr_spmm_numpy(offsets: np.ndarray, cols: np.ndarray, vals: np.ndarray,
                   h: np.ndarray) -> np.ndarray:
    out = np.zeros((offsets.shape[0] - 1, h.shape[1]), dtype=np.float64)
    for i in range(offsets.shape[0] - 1):
        s, e = offsets[i], offsets[i + 1]
        if e > s:
            out[i] = vals[s:e] @ h[cols[s:e]]
    return out


def jacobi_sweeps_numpy(a: np.ndarray, tol: float, max_sweeps: int):
    """Rotate column pairs of ``a`` in place until mutual orthogonality.

    Returns (converged, worst_ratio, sweeps_used) where worst_ratio is the
    largest |a_p . a_q| / (|a_p| |a_q|) seen in the final sweep. Columns
    that rotations drive below machine precision relative to the matrix
    scale are flushed to zero; their residual correlation is pure roundoff
    and would otherwise stall the relative criterion forever.
    """
    m = a.shape[1]
    scale = float(np.linalg.norm(a, axis=0).max()) if a.size else 0.0
    floor_sq = (np.finfo(np.float64).eps * scale) ** 2
    worst = 0.0
    for sweep in range(max_sweeps):
        worst = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                ap = a[:, p]
                aq = a[:, q]
                alpha = float(ap @ ap)
                beta = float(aq @ aq)
                if alpha <= floor_sq:
                    a[:, p] = 0.0
                    continue
                if beta <= floor_sq:
                    a[:, q] = 0.0
                    continue
                gamma = float(ap @ aq)
                limit = tol * np.sqrt(alpha * beta)
                ratio = abs(gamma) / np.sqrt(alpha * beta)
                if ratio > worst:
                    worst = ratio
                if abs(gamma) <= limit:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                if zeta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * ap - s * aq
                new_q = s * ap + c * aq
                a[:, p] = new_p
                a[:, q] = new_q
        if worst <= tol:
            return True, worst, sweep + 1
    return worst <= tol, worst, max_sweeps


if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def csr_spmm_numba(offsets, cols, vals, h):  # pragma: no cover - jitted
        n = offsets.shape[0] - 1
        d = h.shape[1]
        out = np.zeros((n, d), dtype=np.float64)
        for i in range(n):
            for k in range(offsets[i], offsets[i + 1]):
                v = vals[k]
                j = cols[k]
                for c in range(d):
                    out[i, c] += v * h[j, c]
        return out

    @njit(cache=True)
    def jacobi_sweeps_numba(a, tol, max_sweeps):  # pragma: no cover - jitted
        n = a.shape[0]
        m = a.shape[1]
        scale_sq = 0.0
        for q in range(m):
            col_sq = 0.0
            for i in range(n):
                col_sq += a[i, q] * a[i, q]
            if col_sq > scale_sq:
                scale_sq = col_sq
        floor_sq = (2.220446049250313e-16**2) * scale_sq
        worst = 0.0
        for sweep in range(max_sweeps):
            worst = 0.0
            for p in range(m - 1):
                for q in range(p + 1, m):
                    alpha = 0.0
                    beta = 0.0
                    gamma = 0.0
                    for i in range(n):
                        alpha += a[i, p] * a[i, p]
                        beta += a[i, q] * a[i, q]
                        gamma += a[i, p] * a[i, q]
                    if alpha <= floor_sq:
                        for i in range(n):
                            a[i, p] = 0.0
                        continue
                    if beta <= floor_sq:
                        for i in range(n):
                            a[i, q] = 0.0
                        continue
                    norm_prod = np.sqrt(alpha * beta)
                    ratio = abs(gamma) / norm_prod
                    if ratio > worst:
                        worst = ratio
                    if abs(gamma) <= tol * norm_prod:
                        continue
                    zeta = (beta - alpha) / (2.0 * gamma)
                    if zeta == 0.0:
                        t = 1.0
                    else:
                        t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                    c = 1.0 / np.sqrt(1.0 + t * t)
                    s = c * t
                    for i in range(n):
                        tmp_p = c * a[i, p] - s * a[i, q]
                        tmp_q = s * a[i, p] + c * a[i, q]
                        a[i, p] = tmp_p
                        a[i, q] = tmp_q
            if worst <= tol:
                return True, worst, sweep + 1
        return worst <= tol, worst, max_sweeps
else:  # pragma: no cover - exercised via OVERSMOOTH_BACKEND=numpy
    csr_spmm_numba = None
    jacobi_sweeps_numba = None


if USE_NUMBA:
    csr_spmm = csr_spmm_numba
    jacobi_sweeps = jacobi_sweeps_numba
else:
    csr_spmm = csr_spmm_numpy
    jacobi_sweeps = jacobi_sweeps_numpy
