"""Graph container, symmetric normalization, and sparse-dense products."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .kernels import csr_spmm

log = logging.getLogger("oversmooth")


@dataclass(frozen=True)
class SparseGraph:
    """Normalized adjacency in CSR form plus node features, labels, masks.

    The adjacency is D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of
    A + I, so every node carries a self-loop entry and the matrix is
    symmetric. Instances are immutable; all operations on them are pure.
    """

    n: int
    csr_offsets: np.ndarray
    csr_cols: np.ndarray
    csr_vals: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray

    def num_classes(self) -> int:
        valid = self.labels[self.labels >= 0]
        return int(valid.max()) + 1 if valid.size else 0

    def with_features(self, features: np.ndarray) -> "SparseGraph":
        if features.shape[0] != self.n:
            raise ValueError(
                f"feature rows {features.shape[0]} != node count {self.n}"
            )
        return replace(self, features=np.ascontiguousarray(features, dtype=np.float64))


def normalize_adjacency(
    edges: Iterable[tuple[int, int]],
    n: int,
    weights: Sequence[float] | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """CSR triple (offsets, cols, vals) of D^{-1/2} (A + I) D^{-1/2}.

    Input edges are treated as undirected: each pair is mirrored, duplicate
    entries (including a pair given in both directions) coalesce by summing
    weights. Negative weights are rejected because the normalization needs
    positive degrees.
    """
    edges = list(edges)
    if weights is None:
        weights = [1.0] * len(edges)
    if len(weights) != len(edges):
        raise ValueError(f"{len(edges)} edges but {len(weights)} weights")

    undirected: dict[tuple[int, int], float] = {}
    seen_directed: set[tuple[int, int]] = set()
    for (src, dst), w in zip(edges, weights):
        if not (0 <= src < n and 0 <= dst < n):
            raise ValueError(f"edge ({src}, {dst}) out of range for n={n}")
        w = float(w)
        if w < 0.0:
            raise ValueError(f"negative edge weight {w} on edge ({src}, {dst})")
        seen_directed.add((src, dst))
        key = (min(src, dst), max(src, dst))
        undirected[key] = undirected.get(key, 0.0) + w

    asymmetric = sum(
        1 for (s, d) in seen_directed if s != d and (d, s) not in seen_directed
    )
    if asymmetric:
        log.info("symmetrized %d directed-only edge entries", asymmetric)

    # A + I entries per row (self-loop weight 1 on top of any explicit loop).
    rows: list[dict[int, float]] = [dict() for _ in range(n)]
    for i in range(n):
        rows[i][i] = 1.0
    for (i, j), w in undirected.items():
        if i == j:
            rows[i][i] += w
        else:
            rows[i][j] = rows[i].get(j, 0.0) + w
            rows[j][i] = rows[j].get(i, 0.0) + w

    degrees = np.array([sum(r.values()) for r in rows], dtype=np.float64)
    inv_sqrt = 1.0 / np.sqrt(degrees)

    offsets = np.zeros(n + 1, dtype=np.int64)
    cols_out: list[int] = []
    vals_out: list[float] = []
    for i in range(n):
        for j in sorted(rows[i]):
            cols_out.append(j)
            vals_out.append(rows[i][j] * inv_sqrt[i] * inv_sqrt[j])
        offsets[i + 1] = len(cols_out)
    return offsets, np.array(cols_out, dtype=np.int64), np.array(vals_out, dtype=np.float64)


def build_graph(
    edges: Iterable[tuple[int, int]],
    n: int,
    features: np.ndarray,
    labels: Sequence[int],
    train_mask: Sequence[bool],
    val_mask: Sequence[bool],
    test_mask: Sequence[bool],
    weights: Sequence[float] | None = None,
) -> SparseGraph:
    offsets, cols, vals = normalize_adjacency(edges, n, weights)
    features = np.ascontiguousarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    train = np.asarray(train_mask, dtype=bool)
    val = np.asarray(val_mask, dtype=bool)
    test = np.asarray(test_mask, dtype=bool)
    if features.shape[0] != n or labels.shape[0] != n:
        raise ValueError("features/labels length does not match node count")
    for name, m in (("train", train), ("val", val), ("test", test)):
        if m.shape[0] != n:
            raise ValueError(f"{name} mask length {m.shape[0]} != n={n}")
    if np.any(train & val) or np.any(train & test) or np.any(val & test):
        raise ValueError("train/val/test masks overlap")
    return SparseGraph(
        n=n,
        csr_offsets=offsets,
        csr_cols=cols,
        csr_vals=vals,
        features=features,
        labels=labels,
        train_mask=train,
        val_mask=val,
        test_mask=test,
    )


def spmm(g: SparseGraph, h: np.ndarray) -> np.ndarray:
    """Normalized-adjacency times dense matrix."""
    h = np.ascontiguousarray(h, dtype=np.float64)
    if h.shape[0] != g.n:
        raise ValueError(f"spmm dimension mismatch: graph n={g.n}, h rows={h.shape[0]}")
    return csr_spmm(g.csr_offsets, g.csr_cols, g.csr_vals, h)


def spmm_power(g: SparseGraph, h: np.ndarray, hops: int) -> np.ndarray:
    """Apply the normalized adjacency ``hops`` times without materializing it."""
    if hops < 0:
        raise ValueError(f"hops must be >= 0, got {hops}")
    out = np.ascontiguousarray(h, dtype=np.float64)
    for _ in range(hops):
        out = spmm(g, out)
    return out
