import numpy as np
import pytest

from conftest import dense_normalized_adjacency, make_graph, random_edges, random_graph
from oversmooth.graph import build_graph, normalize_adjacency, spmm, spmm_power
from oversmooth.linalg import materialize_adjacency


def dense_of(offsets, cols, vals, n):
    dense = np.zeros((n, n))
    for i in range(n):
        s, e = offsets[i], offsets[i + 1]
        dense[i, cols[s:e]] = vals[s:e]
    return dense


class TestNormalizeAdjacency:
    def test_two_node_single_edge(self):
        offsets, cols, vals = normalize_adjacency([(0, 1)], 2)
        dense = dense_of(offsets, cols, vals, 2)
        assert np.allclose(dense, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_single_node_self_loop(self):
        offsets, cols, vals = normalize_adjacency([], 1)
        assert np.allclose(dense_of(offsets, cols, vals, 1), [[1.0]], atol=1e-15)

    def test_path_graph_matches_dense_oracle(self):
        edges = [(0, 1), (1, 2), (2, 3)]
        offsets, cols, vals = normalize_adjacency(edges, 4)
        dense = dense_of(offsets, cols, vals, 4)
        assert np.max(np.abs(dense - dense_normalized_adjacency(edges, 4))) <= 1e-12

    def test_symmetric_and_self_loops(self, rng):
        n = 12
        edges = random_edges(rng, n, 0.3)
        offsets, cols, vals = normalize_adjacency(edges, n)
        dense = dense_of(offsets, cols, vals, n)
        assert np.max(np.abs(dense - dense.T)) <= 1e-12
        assert np.all(np.diag(dense) > 0.0)

    def test_duplicate_and_reversed_edges_coalesce(self):
        a = normalize_adjacency([(0, 1), (1, 0)], 2)
        b = normalize_adjacency([(0, 1)], 2, weights=[2.0])
        assert np.allclose(dense_of(*a, 2), dense_of(*b, 2), atol=1e-15)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError, match="negative"):
            normalize_adjacency([(0, 1)], 2, weights=[-1.0])

    def test_endpoint_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            normalize_adjacency([(0, 5)], 3)

    def test_regular_graph_row_sums_one(self):
        # Cycle: every node has degree 2, so A + I is 3-regular.
        n = 6
        edges = [(i, (i + 1) % n) for i in range(n)]
        offsets, cols, vals = normalize_adjacency(edges, n)
        dense = dense_of(offsets, cols, vals, n)
        assert np.max(np.abs(dense.sum(axis=1) - 1.0)) <= 1e-12


class TestBuildGraph:
    def test_overlapping_masks_rejected(self):
        n = 3
        mask = np.array([True, False, False])
        with pytest.raises(ValueError, match="overlap"):
            build_graph([], n, np.zeros((n, 2)), [0, 1, 0], mask, mask, ~mask)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            build_graph([], 3, np.zeros((2, 2)), [0, 1, 0],
                        [True, False, False], [False, True, False], [False, False, True])


class TestSpmm:
    def test_identity_adjacency(self, rng):
        g = make_graph([], 5, features=rng.standard_normal((5, 3)))
        h = rng.standard_normal((5, 4))
        assert np.allclose(spmm(g, h), h, atol=1e-15)

    def test_two_node_hand_computation(self):
        g = make_graph([(0, 1)], 2)
        out = spmm(g, np.eye(2))
        assert np.allclose(out, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_against_dense_oracle(self, rng):
        g = random_graph(rng, 15, p=0.3)
        h = rng.standard_normal((15, 6))
        assert np.max(np.abs(spmm(g, h) - materialize_adjacency(g) @ h)) <= 1e-12

    def test_permutation_equivariance(self, rng):
        n = 10
        edges = random_edges(rng, n, 0.3)
        perm = rng.permutation(n)
        h = rng.standard_normal((n, 5))
        g = make_graph(edges, n)
        g_perm = make_graph([(perm[i], perm[j]) for i, j in edges], n)
        out = spmm(g, h)
        h_perm = np.empty_like(h)
        h_perm[perm] = h
        out_perm = spmm(g_perm, h_perm)
        assert np.max(np.abs(out_perm[perm] - out)) <= 1e-12

    def test_preserves_finite(self, rng):
        g = random_graph(rng, 20, p=0.2)
        out = spmm(g, rng.standard_normal((20, 8)) * 1e6)
        assert np.all(np.isfinite(out))

    def test_dimension_mismatch(self, rng):
        g = make_graph([(0, 1)], 2)
        with pytest.raises(ValueError, match="mismatch"):
            spmm(g, rng.standard_normal((3, 2)))


class TestSpmmPower:
    def test_zero_hops(self, rng):
        g = random_graph(rng, 8)
        h = rng.standard_normal((8, 3))
        assert np.array_equal(spmm_power(g, h, 0), h)

    def test_one_hop_is_spmm(self, rng):
        g = random_graph(rng, 8)
        h = rng.standard_normal((8, 3))
        assert np.array_equal(spmm_power(g, h, 1), spmm(g, h))

    def test_three_hops_dense_oracle(self, rng):
        g = random_graph(rng, 10, p=0.3)
        h = rng.standard_normal((10, 4))
        dense = materialize_adjacency(g)
        expected = dense @ (dense @ (dense @ h))
        assert np.max(np.abs(spmm_power(g, h, 3) - expected)) <= 1e-10

    def test_negative_hops_rejected(self, rng):
        g = random_graph(rng, 5)
        with pytest.raises(ValueError, match="hops"):
            spmm_power(g, np.zeros((5, 2)), -1)
