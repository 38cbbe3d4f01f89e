import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from mprs.core import InsufficientSamples, InvalidParameter, ModelParams, PointSet
from mprs.neighbors import build_graph, estimate_bandwidths, knn
from oracles import brute_bandwidth, brute_knn


class TestKnn:
    def test_line_example(self):
        idx, dist = knn(PointSet([0.0, 1.0, 2.0, 3.0]), PointSet([0.6]), 2)
        assert idx.tolist() == [[1, 0]]
        np.testing.assert_allclose(dist, [[0.4, 0.6]])

    def test_coincident_query(self):
        s = PointSet(np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]]))
        idx, dist = knn(s, PointSet(np.array([[1.0, 2.0]])), 1)
        assert idx[0, 0] == 1 and dist[0, 0] == 0.0

    @pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
    def test_matches_brute_force(self, rng, d):
        s = rng.uniform(0, 1, size=(200, d))
        q = rng.uniform(0, 1, size=(50, d))
        idx, dist = knn(PointSet(s), PointSet(q), 8)
        bi, bd = brute_knn(s, q, 8)
        np.testing.assert_array_equal(idx, bi)
        np.testing.assert_allclose(dist, bd, rtol=1e-14)

    def test_ties_broken_by_lowest_index(self):
        # query at the center of a square: four equidistant samples
        s = np.array([[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [5.0, 5.0]] * 3)
        idx, _ = knn(PointSet(s), PointSet(np.zeros((1, 2))), 6)
        assert idx[0].tolist() == [0, 1, 2, 3, 5, 6]

    def test_integer_grid_ties_against_oracle(self):
        g = np.stack(np.meshgrid(np.arange(12.0), np.arange(12.0)), -1).reshape(-1, 2)
        q = np.array([[5.5, 5.5], [0.0, 0.0], [3.0, 7.5], [11.5, 0.5]])
        idx, dist = knn(PointSet(g), PointSet(q), 9)
        bi, bd = brute_knn(g, q, 9)
        np.testing.assert_array_equal(idx, bi)

    def test_permutation_stable_sets(self, rng):
        s = rng.uniform(0, 1, size=(100, 2))
        q = rng.uniform(0, 1, size=(30, 2))
        perm = rng.permutation(100)
        i1, d1 = knn(PointSet(s), PointSet(q), 8)
        i2, d2 = knn(PointSet(s[perm]), PointSet(q), 8)
        np.testing.assert_array_equal(perm[i2], i1)
        np.testing.assert_array_equal(d1, d2)

    def test_errors(self):
        with pytest.raises(InsufficientSamples):
            knn(PointSet(np.zeros((3, 2))), PointSet(np.zeros((1, 2))), 4)
        with pytest.raises(InvalidParameter):
            knn(PointSet(np.zeros((3, 2))), PointSet(np.zeros((1, 3))), 1)

    def test_empty_queries(self):
        idx, dist = knn(PointSet(np.zeros((3, 2))), PointSet(np.zeros((0, 2))), 2)
        assert idx.shape == (0, 2)

    @given(hnp.arrays(float, st.tuples(st.integers(9, 40), st.integers(1, 3)),
                      elements=st.integers(-5, 5).map(float)))
    def test_rows_sorted_distinct_property(self, s):
        q = s[:5] + 0.5
        idx, dist = knn(PointSet(s), PointSet(q), 8)
        assert np.all(np.diff(dist, axis=1) >= 0)
        assert all(len(set(r)) == 8 for r in idx.tolist())
        bi, bd = brute_knn(s, q, 8)
        np.testing.assert_array_equal(idx, bi)


class TestBandwidth:
    def test_median_of_four(self):
        s = PointSet(np.array([1.0, 2.0, 3.0, 4.0, 9.0]))
        assert estimate_bandwidths(s, PointSet([0.0]))[0] == pytest.approx(2.5)

    def test_equidistant(self):
        s = PointSet(np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]) * 3.0)
        assert estimate_bandwidths(s, PointSet(np.zeros((1, 2))))[0] == pytest.approx(3.0)

    def test_matches_oracle(self, rng):
        s = rng.uniform(0, 5, size=(80, 2))
        q = rng.uniform(0, 5, size=(40, 2))
        np.testing.assert_allclose(estimate_bandwidths(PointSet(s), PointSet(q)), brute_bandwidth(s, q),
                                   rtol=1e-14)

    def test_zero_bandwidth_is_floored(self):
        s = PointSet(np.array([[0.0, 0.0]] * 3 + [[10.0, 0.0]]))
        b = estimate_bandwidths(s, PointSet(np.zeros((1, 2))))
        assert b[0] == pytest.approx(1e-12 * 10.0)


class TestGraph:
    def test_coupling_at_zero_and_bandwidth(self):
        s = PointSet(np.array([0.0, 1.0, 2.0, 3.0, 4.0, 5.0]))
        g = build_graph(s, PointSet([2.0]), ModelParams(n_b=5))
        assert g.coupling[0, 0] == 1.0
        # distances 0, 1, 1, 2, 2 -> b = 1, so the unit-distance bonds are e^-1
        np.testing.assert_allclose(g.coupling[0, 1:3], np.exp(-1.0), rtol=1e-15)

    def test_invariants(self, rng):
        s = PointSet(rng.uniform(0, 1, (60, 3)))
        q = PointSet(rng.uniform(0, 1, (25, 3)))
        g = build_graph(s, q)
        assert g.neighbor_idx.shape == (25, 8)
        assert np.all(np.diff(g.neighbor_dist, axis=1) >= 0)
        assert np.all(np.diff(g.coupling, axis=1) <= 0)
        assert np.all((g.coupling > 0) & (g.coupling <= 1))
        np.testing.assert_array_equal(g.coupling, np.exp(-g.neighbor_dist / g.bandwidth[:, None]))
        np.testing.assert_allclose(g.bandwidth, brute_bandwidth(s.coords, q.coords), rtol=1e-14)

    def test_bandwidth_uses_four_neighbours_even_for_small_nb(self, rng):
        s = PointSet(rng.uniform(0, 1, (30, 2)))
        q = PointSet(rng.uniform(0, 1, (10, 2)))
        g = build_graph(s, q, ModelParams(n_b=1))
        assert g.neighbor_idx.shape == (10, 1)
        np.testing.assert_allclose(g.bandwidth, brute_bandwidth(s.coords, q.coords), rtol=1e-14)

    def test_scale_invariance(self, rng):
        s = rng.uniform(0, 1, (50, 2))
        q = rng.uniform(0, 1, (20, 2))
        g1 = build_graph(PointSet(s), PointSet(q))
        g2 = build_graph(PointSet(s * 64.0), PointSet(q * 64.0))
        np.testing.assert_array_equal(g1.neighbor_idx, g2.neighbor_idx)
        np.testing.assert_allclose(g1.coupling, g2.coupling, rtol=1e-13)

    def test_graph_is_immutable(self, rng):
        g = build_graph(PointSet(rng.uniform(0, 1, (10, 2))), PointSet(rng.uniform(0, 1, (2, 2))))
        with pytest.raises(ValueError):
            g.coupling[0, 0] = 0.5

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamples):
            build_graph(PointSet(np.zeros((3, 1))), PointSet([0.0]), ModelParams(n_b=2))
