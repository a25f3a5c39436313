"""Shared fixtures and independent oracle helpers for the test suite.

Oracles here deliberately avoid the library's own code paths: dense
normalization is rebuilt from scratch, SVDs are cross-checked through
eigenvalues of W^T W, and MASED through the O(N^2 d) pairwise loop.
"""

import numpy as np
import pytest

from oversmooth.graph import build_graph


def dense_normalized_adjacency(edges, n, weights=None):
    """Dense D^{-1/2} (A + I) D^{-1/2} built independently of the library."""
    a = np.zeros((n, n))
    if weights is None:
        weights = [1.0] * len(edges)
    for (i, j), w in zip(edges, weights):
        if i == j:
            a[i, i] += w
        else:
            a[i, j] += w
            a[j, i] += w
    a += np.eye(n)
    d = a.sum(axis=1)
    inv_sqrt = np.diag(1.0 / np.sqrt(d))
    return inv_sqrt @ a @ inv_sqrt


def random_edges(rng, n, p):
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j))
    return edges


def make_graph(edges, n, features=None, labels=None, rng=None):
    """SparseGraph with simple round-robin labels and a leading train block."""
    if rng is None:
        rng = np.random.default_rng(0)
    if features is None:
        features = rng.standard_normal((n, 4))
    if labels is None:
        labels = np.arange(n) % 2
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    train[: max(1, n // 3)] = True
    val[max(1, n // 3) : max(2, 2 * n // 3)] = True
    test[max(2, 2 * n // 3) :] = True
    return build_graph(edges, n, features, labels, train, val, test)


def random_graph(rng, n, p=0.2, feature_dim=4):
    return make_graph(
        random_edges(rng, n, p),
        n,
        features=rng.standard_normal((n, feature_dim)),
        labels=rng.integers(0, 3, size=n),
        rng=rng,
    )


def pairwise_mased(h):
    """O(N^2 d) mean of all squared pairwise row distances, diagonal included."""
    n = h.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(n):
            diff = h[i] - h[j]
            total += float(diff @ diff)
    return total / (n * n)


def singular_values_oracle(w):
    """Descending singular values via eigenvalues of the smaller Gram matrix."""
    gram = w.T @ w if w.shape[0] >= w.shape[1] else w @ w.T
    eigs = np.linalg.eigvalsh(gram)
    return np.sqrt(np.clip(eigs, 0.0, None))[::-1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
