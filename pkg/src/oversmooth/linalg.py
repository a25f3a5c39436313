"""Dense kernels, singular values, and spectral utilities.

All matrices are float64 ``numpy.ndarray``s. Singular values come from a
one-sided Jacobi method, chosen for its accuracy on the smallest singular
values (which the bound computations depend on); matrices here are small
enough that its cost is irrelevant next to that accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .kernels import csr_spmm, jacobi_sweeps

if TYPE_CHECKING:
    from .graph import SparseGraph

JACOBI_OFFDIAG_TOL = 1e-12
JACOBI_MAX_SWEEPS = 60
POWER_TOL = 1e-10
POWER_MAX_ITERS = 10000
DENSE_SIGMA_MIN_THRESHOLD = 4096


class ConvergenceError(RuntimeError):
    """An iterative routine failed to reach its tolerance."""


@dataclass(frozen=True)
class SvdSummary:
    sigma_max: float
    sigma_min: float
    all_singular_values: np.ndarray  # descending, length min(rows, cols)


def as_matrix(a) -> np.ndarray:
    m = np.ascontiguousarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def svd_values(w: np.ndarray) -> SvdSummary:
    """Singular values of ``w`` via one-sided Jacobi rotations."""
    w = as_matrix(w)
    if w.size == 0:
        raise ValueError("svd_values requires a nonempty matrix")
    # Rotate the wider side's columns so we orthogonalize min(rows, cols)
    # columns of the tall orientation.
    a = w.copy() if w.shape[0] >= w.shape[1] else np.ascontiguousarray(w.T)
    converged, residual, _sweeps = jacobi_sweeps(
        a, JACOBI_OFFDIAG_TOL, JACOBI_MAX_SWEEPS
    )
    if not converged:
        raise ConvergenceError(
            f"Jacobi SVD did not converge in {JACOBI_MAX_SWEEPS} sweeps; "
            f"off-diagonal residual {residual:.3e}"
        )
    sigma = np.sort(np.linalg.norm(a, axis=0))[::-1]
    return SvdSummary(
        sigma_max=float(sigma[0]),
        sigma_min=float(sigma[-1]),
        all_singular_values=sigma,
    )


def _adj_matvec(g: "SparseGraph", v: np.ndarray) -> np.ndarray:
    return csr_spmm(g.csr_offsets, g.csr_cols, g.csr_vals, v[:, None])[:, 0]


def spectral_norm_sparse(g: "SparseGraph") -> float:
    """Largest singular value of the normalized adjacency by power iteration.

    Iterates on the square of the (symmetric) operator so the Rayleigh
    quotient converges to sigma_max^2 regardless of eigenvalue signs.
    """
    n = g.n
    v = np.full(n, 1.0 / np.sqrt(n))
    prev = np.inf
    for _ in range(POWER_MAX_ITERS):
        w = _adj_matvec(g, _adj_matvec(g, v))
        ray = float(v @ w)
        if abs(ray - prev) < POWER_TOL:
            return float(np.sqrt(max(ray, 0.0)))
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        prev = ray
    raise ConvergenceError(
        f"power iteration did not converge in {POWER_MAX_ITERS} iterations; "
        f"last Rayleigh quotients {prev:.17g}, {ray:.17g}"
    )


def materialize_adjacency(g: "SparseGraph") -> np.ndarray:
    """Dense copy of the normalized adjacency (small graphs only)."""
    dense = np.zeros((g.n, g.n), dtype=np.float64)
    for i in range(g.n):
        s, e = g.csr_offsets[i], g.csr_offsets[i + 1]
        dense[i, g.csr_cols[s:e]] = g.csr_vals[s:e]
    return dense


def min_singular_sparse(g: "SparseGraph",
                        dense_threshold: int = DENSE_SIGMA_MIN_THRESHOLD):
    """Smallest singular value of the normalized adjacency, or ``None``.

    Graphs larger than ``dense_threshold`` nodes are not materialized;
    ``None`` signals "not computed" and callers must report a zero lower
    bound with provenance.
    """
    if g.n > dense_threshold:
        return None
    return svd_values(materialize_adjacency(g)).sigma_min
