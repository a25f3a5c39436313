"""Oversmoothing diagnostics: MASED, spectral bounds, and related signals."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .graph import SparseGraph
from .linalg import SvdSummary, svd_values

ZERO_ROW_TOL = 1e-12


class DegenerateEmbeddingsError(ValueError):
    """All embeddings are zero; alignment quantities are undefined."""


@dataclass(frozen=True)
class GramStats:
    """Trace and uniform-direction energy of H H^T, computed in O(n d)."""

    trace: float
    uniform_energy: float
    n: int
    d: int


@dataclass(frozen=True)
class LayerBounds:
    mased: float
    lower: float
    upper: float
    epsilon: float
    sigma_min_w: float
    sigma_max_w: float
    m_hat: float
    big_m_hat: float
    degenerate: bool = False


@dataclass(frozen=True)
class NetworkBounds:
    lower: float
    upper: float
    sigma_max_adj: float
    sigma_min_adj: float | None  # None when too large to materialize
    lower_is_exact: bool


def gram_stats(h: np.ndarray) -> GramStats:
    h = linalg.as_matrix(h)
    if h.size == 0:
        raise ValueError("gram_stats requires a nonempty matrix")
    trace = float(np.einsum("ij,ij->", h, h))
    col_sums = h.sum(axis=0)
    uniform = float(col_sums @ col_sums)
    return GramStats(trace=trace, uniform_energy=uniform, n=h.shape[0], d=h.shape[1])


def compute_mased(h: np.ndarray) -> float:
    """Mean squared pairwise distance between rows, via the Gram identity."""
    stats = gram_stats(h)
    value = (2.0 / stats.n) * (stats.trace - stats.uniform_energy / stats.n)
    if value < 0.0:
        if value < -1e-12:
            raise ValueError(f"negative MASED {value} beyond rounding slack")
        value = 0.0
    return value


def spectral_alignment_epsilon(h: np.ndarray) -> float:
    """Tightest admissible fraction of Gram energy off the uniform direction.

    This is the exact value for which uniform_energy = (1 - eps) * n * trace,
    so the measured value makes the lower-bound inequality checkable instead
    of hypothesized.
    """
    stats = gram_stats(h)
    if stats.trace <= 0.0:
        raise DegenerateEmbeddingsError("degenerate-all-zero")
    eps = 1.0 - stats.uniform_energy / (stats.n * stats.trace)
    return float(min(1.0, max(0.0, eps)))


def collapse_epsilon(h: np.ndarray) -> float:
    """Scale-invariant collapse flag: alignment of row *directions*.

    Row norms are divided out (zero rows dropped) before measuring the
    uniform-direction energy, so any embedding matrix whose rows are
    positive multiples of one vector scores 0 even when the rows have
    different lengths. This is the signal that detects feature collapse;
    it is intentionally distinct from the bound-tight value above, which
    is not scale-invariant.
    """
    h = linalg.as_matrix(h)
    norms = np.linalg.norm(h, axis=1)
    keep = norms > ZERO_ROW_TOL
    if not np.any(keep):
        raise DegenerateEmbeddingsError("degenerate-all-zero")
    normalized = h[keep] / norms[keep, None]
    return spectral_alignment_epsilon(normalized)


def map_sigma_min(w: np.ndarray, sv: SvdSummary) -> float:
    """Smallest singular value of ``w`` viewed as a map on row vectors.

    A matrix with more rows than columns has a nontrivial nullspace, so the
    norm floor ``|u @ w| >= sigma_min |u|`` only holds with sigma_min = 0
    there; the SVD's smallest of min(rows, cols) values would overstate it.
    """
    return sv.sigma_min if w.shape[0] <= w.shape[1] else 0.0


def layer_bounds(h_hat: np.ndarray, w: np.ndarray, h_out: np.ndarray) -> LayerBounds:
    """Measured MASED of a layer output with its spectral envelope.

    ``h_out`` must be the activation the caller actually produced from
    ``h_hat`` and ``w``; this function only measures, it does not recompute
    the forward step.
    """
    h_hat = linalg.as_matrix(h_hat)
    h_out = linalg.as_matrix(h_out)
    if h_hat.shape[0] != h_out.shape[0] or h_hat.shape[1] != w.shape[0]:
        raise ValueError(
            f"inconsistent shapes: h_hat {h_hat.shape}, w {w.shape}, h_out {h_out.shape}"
        )
    sv = svd_values(w)
    row_norms = np.linalg.norm(h_hat, axis=1)
    m_hat = float(row_norms.min())
    big_m_hat = float(row_norms.max())
    mased = compute_mased(h_out)
    try:
        eps = spectral_alignment_epsilon(h_out)
        degenerate = False
    except DegenerateEmbeddingsError:
        eps = 0.0
        degenerate = True
    return LayerBounds(
        mased=mased,
        lower=2.0 * eps * map_sigma_min(w, sv) ** 2 * m_hat**2,
        upper=2.0 * sv.sigma_max**2 * big_m_hat**2,
        epsilon=eps,
        sigma_min_w=sv.sigma_min,
        sigma_max_w=sv.sigma_max,
        m_hat=m_hat,
        big_m_hat=big_m_hat,
        degenerate=degenerate,
    )


def network_bounds(
    g: SparseGraph,
    x: np.ndarray,
    weights: Sequence[np.ndarray],
    epsilon: float,
    dense_threshold: int = linalg.DENSE_SIGMA_MIN_THRESHOLD,
) -> NetworkBounds:
    """Whole-network MASED envelope from input norms and spectral factors."""
    if len(weights) == 0:
        raise ValueError("network_bounds requires at least one weight matrix")
    depth = len(weights)
    x = linalg.as_matrix(x)
    row_norms = np.linalg.norm(x, axis=1)
    m_x = float(row_norms.min())
    big_m_x = float(row_norms.max())
    sigma_max_adj = linalg.spectral_norm_sparse(g)
    sigma_min_adj = linalg.min_singular_sparse(g, dense_threshold)

    prod_max = 1.0
    prod_min = 1.0
    for w in weights:
        sv = svd_values(w)
        prod_max *= sv.sigma_max
        prod_min *= map_sigma_min(w, sv)

    upper = 2.0 * (sigma_max_adj ** (depth - 1) * big_m_x * prod_max) ** 2
    if sigma_min_adj is None:
        lower = 0.0
        exact = False
    else:
        lower = 2.0 * epsilon * (sigma_min_adj ** (depth - 1) * m_x * prod_min) ** 2
        exact = True
    return NetworkBounds(
        lower=lower,
        upper=upper,
        sigma_max_adj=sigma_max_adj,
        sigma_min_adj=sigma_min_adj,
        lower_is_exact=exact,
    )


def embedding_norm_stats(h: np.ndarray, scope_mask: Sequence[bool]):
    """(mean, min, max) of row norms over the masked rows."""
    h = linalg.as_matrix(h)
    mask = np.asarray(scope_mask, dtype=bool)
    if mask.shape[0] != h.shape[0]:
        raise ValueError(f"mask length {mask.shape[0]} != rows {h.shape[0]}")
    if not np.any(mask):
        raise ValueError("scope mask selects no rows")
    norms = np.linalg.norm(h[mask], axis=1)
    return float(norms.mean()), float(norms.min()), float(norms.max())


def centroid_angles(h: np.ndarray, labels: Sequence[int], mask: Sequence[bool]):
    """Mean pairwise angle (degrees) between class centroids of masked rows.

    Pairs with a near-zero centroid are skipped and counted; collapsing
    centroids therefore show up both as shrinking angles and as skips.
    """
    h = linalg.as_matrix(h)
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    present = sorted(set(labels[mask & (labels >= 0)].tolist()))
    if len(present) < 2:
        raise ValueError("centroid_angles needs at least 2 classes in the mask")
    centroids = []
    for c in present:
        rows = h[mask & (labels == c)]
        centroids.append(rows.mean(axis=0))
    angles = []
    skipped = 0
    for i in range(len(centroids)):
        for j in range(i + 1, len(centroids)):
            ni = np.linalg.norm(centroids[i])
            nj = np.linalg.norm(centroids[j])
            if ni < ZERO_ROW_TOL or nj < ZERO_ROW_TOL:
                skipped += 1
                continue
            cosine = float(centroids[i] @ centroids[j]) / (ni * nj)
            angles.append(np.degrees(np.arccos(np.clip(cosine, -1.0, 1.0))))
    mean_angle = float(np.mean(angles)) if angles else 0.0
    return mean_angle, skipped


def survival_probability(weights: Sequence[np.ndarray], threshold: float = 0.5):
    """Per-layer count of singular values above threshold and their survival product."""
    if threshold <= 0.0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    per_layer_k: list[int] = []
    probability = 1.0
    for w in weights:
        sv = svd_values(w)
        k = int(np.sum(sv.all_singular_values > threshold))
        d = sv.all_singular_values.shape[0]
        per_layer_k.append(k)
        probability *= k / d
    return per_layer_k, float(probability)


def row_norm_spread_bound(h_hat: np.ndarray, w: np.ndarray):
    """Spread of transformed row norms against its conditioning-based floor.

    Returns (delta_r, bound, applicable). The floor can be vacuous when the
    weight matrix distorts more than the rows spread; ``applicable`` makes
    that explicit instead of clamping.
    """
    h_hat = linalg.as_matrix(h_hat)
    w = linalg.as_matrix(w)
    if h_hat.shape[1] != w.shape[0]:
        raise ValueError(f"shape mismatch: h_hat {h_hat.shape}, w {w.shape}")
    transformed = np.linalg.norm(h_hat @ w, axis=1)
    delta_r = float(transformed.max() - transformed.min())
    row_norms = np.linalg.norm(h_hat, axis=1)
    m_hat = float(row_norms.min())
    big_m_hat = float(row_norms.max())
    sv = svd_values(w)
    sigma_min = map_sigma_min(w, sv)
    if sigma_min == 0.0:
        bound = 0.0
        applicable = big_m_hat > 0.0 and m_hat == 0.0
    else:
        kappa = sv.sigma_max / sigma_min
        bound = sigma_min * (big_m_hat - kappa * m_hat)
        applicable = big_m_hat >= kappa * m_hat
    return delta_r, bound, applicable
