import numpy as np
import pytest

from conftest import make_graph, random_graph, singular_values_oracle
from oversmooth.graph import build_graph
from oversmooth.linalg import (
    matmul,
    materialize_adjacency,
    min_singular_sparse,
    spectral_norm_sparse,
    svd_values,
)


class TestMatmul:
    def test_identity(self, rng):
        m = rng.standard_normal((3, 5))
        assert np.array_equal(matmul(np.eye(3), m), m)

    def test_hand_checked_2x2(self):
        out = matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[0.0], [1.0]]))
        assert np.array_equal(out, np.array([[2.0], [4.0]]))

    def test_against_triple_loop(self, rng):
        a = rng.standard_normal((7, 5))
        b = rng.standard_normal((5, 3))
        expected = np.zeros((7, 3))
        for i in range(7):
            for j in range(3):
                for k in range(5):
                    expected[i, j] += a[i, k] * b[k, j]
        assert np.max(np.abs(matmul(a, b) - expected)) <= 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            matmul(rng.standard_normal((2, 3)), rng.standard_normal((2, 3)))

    def test_associativity(self, rng):
        for _ in range(5):
            a = rng.standard_normal((4, 6))
            b = rng.standard_normal((6, 5))
            c = rng.standard_normal((5, 3))
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            scale = np.max(np.abs(left)) + 1.0
            assert np.max(np.abs(left - right)) / scale <= 1e-10


class TestSvdValues:
    def test_diagonal(self):
        sv = svd_values(np.diag([3.0, 1.0]))
        assert sv.sigma_max == pytest.approx(3.0, abs=1e-12)
        assert sv.sigma_min == pytest.approx(1.0, abs=1e-12)

    def test_identity(self):
        sv = svd_values(np.eye(4))
        assert np.allclose(sv.all_singular_values, 1.0, atol=1e-12)

    def test_against_gram_eigenvalue_oracle(self, rng):
        w = rng.standard_normal((6, 6))
        sv = svd_values(w)
        oracle = singular_values_oracle(w)
        assert np.max(np.abs(sv.all_singular_values - oracle)) <= 1e-8 * oracle[0]

    def test_sorted_descending_with_endpoints(self, rng):
        sv = svd_values(rng.standard_normal((8, 5)))
        vals = sv.all_singular_values
        assert vals.shape == (5,)
        assert np.all(np.diff(vals) <= 0)
        assert sv.sigma_max == vals[0]
        assert sv.sigma_min == vals[-1]

    def test_row_permutation_invariance(self, rng):
        w = rng.standard_normal((7, 4))
        perm = rng.permutation(7)
        a = svd_values(w).all_singular_values
        b = svd_values(w[perm]).all_singular_values
        assert np.max(np.abs(a - b)) <= 1e-10 * max(a[0], 1.0)

    def test_vector_norm_inequality(self, rng):
        w = rng.standard_normal((6, 9))
        sv = svd_values(w)
        for _ in range(100):
            u = rng.standard_normal(6)
            nu = np.linalg.norm(u)
            nuw = np.linalg.norm(u @ w)
            assert nuw <= sv.sigma_max * nu * (1.0 + 1e-9)
            assert nuw >= sv.sigma_min * nu * (1.0 - 1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            svd_values(np.zeros((0, 3)))


class TestSpectralNormSparse:
    def test_two_node_graph(self):
        g = make_graph([(0, 1)], 2)
        assert spectral_norm_sparse(g) == pytest.approx(1.0, abs=1e-9)

    def test_normalized_adjacency_at_most_one(self, rng):
        for _ in range(5):
            g = random_graph(rng, int(rng.integers(4, 30)))
            assert spectral_norm_sparse(g) <= 1.0 + 1e-9

    def test_against_dense_svd(self, rng):
        g = random_graph(rng, 20, p=0.25)
        dense_sigma = svd_values(materialize_adjacency(g)).sigma_max
        assert spectral_norm_sparse(g) == pytest.approx(dense_sigma, abs=1e-8)


class TestMinSingularSparse:
    def test_two_node_graph_rank_one(self):
        g = make_graph([(0, 1)], 2)
        assert min_singular_sparse(g) == pytest.approx(0.0, abs=1e-10)

    def test_no_edges_identity(self):
        g = make_graph([], 3)
        assert min_singular_sparse(g) == pytest.approx(1.0, abs=1e-12)

    def test_threshold_returns_none(self):
        n = 5000
        g = build_graph(
            [],
            n,
            np.zeros((n, 1)),
            np.zeros(n, dtype=np.int64),
            np.r_[True, np.zeros(n - 1, dtype=bool)],
            np.zeros(n, dtype=bool),
            np.zeros(n, dtype=bool),
        )
        assert min_singular_sparse(g, dense_threshold=4096) is None
