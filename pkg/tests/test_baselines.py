import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mprs.baselines import OrdinaryKriging, SingularSystem, idw_predict, idw_weights, ok_predict, ok_weights
from mprs.core import InsufficientSamples, InvalidParameter, PointSet
from mprs.fields import WmParams, wm_covariance
from oracles import REFERENCE, bordered_kriging, idw_point


class TestIdw:
    def test_two_sample_example(self):
        s = PointSet(np.array([[1.0], [-2.0]]), [10.0, 20.0])
        assert idw_predict(s, PointSet([0.0]))[0] == pytest.approx(12.0, rel=1e-15)

    def test_exact_at_samples(self, rng):
        s = PointSet(rng.uniform(0, 1, (20, 2)), rng.normal(size=20))
        np.testing.assert_array_equal(idw_predict(s, PointSet(s.coords[[3, 11]])), s.values[[3, 11]])

    def test_matches_oracle(self, rng):
        s = PointSet(rng.uniform(0, 1, (40, 3)), rng.normal(size=40))
        q = rng.uniform(0, 1, (15, 3))
        got = idw_predict(s, PointSet(q), power=2.0)
        ref = [idw_point(s.coords, s.values, x) for x in q]
        np.testing.assert_allclose(got, ref, rtol=1e-13)

    def test_weights_sum_to_one(self, rng):
        w = idw_weights(PointSet(rng.uniform(0, 1, (30, 2))), PointSet(rng.uniform(0, 1, (10, 2))))
        np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-10)

    def test_chunking_is_invisible(self, rng):
        s = PointSet(rng.uniform(0, 1, (10, 2)), rng.normal(size=10))
        q = PointSet(rng.uniform(0, 1, (5000, 2)))
        full = idw_predict(s, q)
        np.testing.assert_allclose(full[4090:4100], idw_predict(s, q.subset(slice(4090, 4100))), rtol=1e-13)

    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=3), st.floats(-5, 5), st.floats(-5, 5))
    def test_convex_and_affine(self, z, a, b):
        s = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]), z)
        q = PointSet(np.array([[0.3, 0.4], [2.0, 2.0]]))
        p = idw_predict(s, q)
        assert np.all(p >= min(z) - 1e-9) and np.all(p <= max(z) + 1e-9)
        p2 = idw_predict(s.with_values(a * np.asarray(z) + b), q)
        np.testing.assert_allclose(p2, a * p + b, atol=1e-9)

    def test_errors(self):
        with pytest.raises(InvalidParameter):
            idw_predict(PointSet([0.0]), PointSet([1.0]))
        with pytest.raises(InsufficientSamples):
            idw_predict(PointSet(np.zeros((0, 1)), np.zeros(0)), PointSet([1.0]))
        with pytest.raises(InvalidParameter):
            idw_weights(PointSet([0.0]), PointSet([1.0]), power=0)


def exp_cov(sigma, kappa):
    return lambda h: sigma ** 2 * np.exp(-kappa * h)


class TestKriging:
    def test_symmetric_pair(self):
        s = PointSet(np.array([[-1.0, 0.0], [1.0, 0.0]]), [1.0, 3.0])
        w = ok_weights(s, PointSet(np.zeros((1, 2))), WmParams(1, 0.5, 1))
        np.testing.assert_allclose(w, [[0.5, 0.5]], atol=1e-14)

    def test_exact_interpolation(self, rng):
        s = PointSet(rng.uniform(0, 10, (25, 2)), rng.normal(size=25))
        mean, var = ok_predict(s, PointSet(s.coords[[0, 9]]), WmParams(1.0, 0.5, 0.4))
        np.testing.assert_array_equal(mean, s.values[[0, 9]])
        np.testing.assert_array_equal(var, 0.0)

    def test_frozen_instance(self):
        ref = REFERENCE["ordinary_kriging"]
        s = PointSet(np.array(ref["samples"]), ref["values"])
        cov = WmParams(ref["sigma"], ref["nu"], ref["kappa"])
        mean, var = ok_predict(s, PointSet(np.array(ref["queries"])), cov)
        np.testing.assert_allclose(mean, ref["mean"], rtol=0, atol=1e-8)
        np.testing.assert_allclose(var, ref["variance"], rtol=0, atol=1e-8)
        np.testing.assert_allclose(ok_weights(s, PointSet(np.array(ref["queries"])), cov), ref["weights"],
                                   atol=1e-8)

    @pytest.mark.parametrize("nu", [0.3, 0.5, 1.5])
    def test_bordered_system_oracle(self, rng, nu):
        s = PointSet(rng.uniform(0, 10, (20, 2)), rng.normal(3, 1, 20))
        q = rng.uniform(0, 10, (6, 2))
        cov = WmParams(1.4, nu, 0.5)
        mean, var = ok_predict(s, PointSet(q), cov)
        for i, x in enumerate(q):
            m, v, _ = bordered_kriging(s.coords, s.values, x, lambda h: wm_covariance(h, cov))
            assert mean[i] == pytest.approx(m, abs=1e-8)
            assert var[i] == pytest.approx(v, abs=1e-8)

    def test_weights_sum_and_linearity(self, rng):
        s = PointSet(rng.uniform(0, 10, (30, 2)), rng.normal(size=30))
        q = PointSet(rng.uniform(0, 10, (12, 2)))
        cov = WmParams(1.0, 0.5, 0.3)
        np.testing.assert_allclose(ok_weights(s, q, cov).sum(axis=1), 1.0, atol=1e-10)
        m1, _ = ok_predict(s, q, cov)
        m2, _ = ok_predict(s.with_values(-2.5 * s.values + 7), q, cov)
        np.testing.assert_allclose(m2, -2.5 * m1 + 7, atol=1e-9)

    def test_pure_nugget_gives_sample_mean(self, rng):
        s = PointSet(rng.uniform(0, 10, (15, 2)), rng.normal(size=15))
        mean, var = ok_predict(s, PointSet(rng.uniform(0, 10, (4, 2))), WmParams(1.0, 0.5, 1e6))
        np.testing.assert_allclose(mean, s.values.mean(), atol=1e-12)
        np.testing.assert_allclose(var, 1.0 + 1.0 / 15, rtol=1e-12)

    def test_duplicate_sites(self):
        s = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), [1.0, 2.0, 3.0])
        with pytest.raises(SingularSystem) as exc:
            OrdinaryKriging(s, WmParams())
        assert exc.value.indices == [0, 2]

    def test_variance_nonnegative(self, rng):
        s = PointSet(rng.uniform(0, 10, (30, 1)), rng.normal(size=30))
        _, var = ok_predict(s, PointSet(rng.uniform(-5, 15, (50, 1))), WmParams(2.0, 1.5, 0.8))
        assert np.all(var >= 0)
