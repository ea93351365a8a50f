import math

import numpy as np
import pytest

from dpmhp.metrics import (
    WtaMetric,
    default_delta,
    distance,
    log_distance,
    metric_distances,
    metric_gradient,
    nearest_indices,
    squared_distance,
)


def central_difference(fn, a, step=1e-5):
    """Independent gradient oracle: central finite differences per coordinate."""
    a = np.asarray(a, dtype=np.float64)
    grad = np.zeros_like(a)
    for j in range(a.size):
        hi = a.copy()
        lo = a.copy()
        hi[j] += step
        lo[j] -= step
        grad[j] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad


class TestSquaredDistance:
    def test_identity(self):
        assert squared_distance((1.0, 2.0), (1.0, 2.0)) == 0.0

    def test_three_four_five(self):
        assert squared_distance((3.0, 4.0), (0.0, 0.0)) == 25.0

    def test_symmetric_1d(self):
        assert squared_distance([0.5], [-0.5]) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            squared_distance((1.0, 2.0), (1.0, 2.0, 3.0))

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            a = rng.standard_normal(3)
            b = rng.standard_normal(3)
            d = squared_distance(a, b)
            assert d > 0.0
            assert squared_distance(a, a) == 0.0


class TestLogDistance:
    def test_zero_norm_case(self):
        value = log_distance((1.0, 1.0), (1.0, 1.0), 0.01)
        assert value == pytest.approx(-4.605170185988091, abs=1e-12)

    def test_three_four_five(self):
        # high-precision scalar evaluation of log(hypot + delta)
        expected = math.log(math.hypot(3.0, 4.0) + 0.01)
        value = log_distance((3.0, 4.0), (0.0, 0.0), 0.01)
        assert value == pytest.approx(expected, abs=1e-12)
        assert value == pytest.approx(1.6114359150967734, abs=1e-12)

    def test_unit_interval(self):
        assert log_distance([1.0], [0.0], 1.0) == pytest.approx(0.6931471805599453, abs=1e-12)

    def test_delta_validation(self):
        with pytest.raises(ValueError, match="delta"):
            log_distance([1.0], [0.0], 0.0)
        with pytest.raises(ValueError, match="delta"):
            log_distance([1.0], [0.0], -0.1)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            log_distance((1.0,), (1.0, 2.0), 0.1)

    def test_monotone_in_norm(self):
        rng = np.random.default_rng(11)
        direction = rng.standard_normal(4)
        direction /= np.linalg.norm(direction)
        radii = np.sort(rng.uniform(0.0, 5.0, size=50))
        values = [log_distance(r * direction, np.zeros(4), 0.05) for r in radii]
        assert np.all(np.diff(values) >= 0.0)

    def test_lower_bound_log_delta(self):
        rng = np.random.default_rng(13)
        delta = 0.02
        floor = math.log(delta)
        assert log_distance([2.0], [2.0], delta) == pytest.approx(floor, abs=1e-12)
        for _ in range(50):
            a, b = rng.standard_normal((2, 3))
            assert log_distance(a, b, delta) > floor


class TestSymmetry:
    @pytest.mark.parametrize("metric", [WtaMetric.l2(), WtaMetric.ldp(0.05)])
    def test_distance_symmetric(self, metric):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a, b = rng.standard_normal((2, 5))
            assert distance(metric, a, b) == distance(metric, b, a)


class TestMetricGradient:
    def test_l2_simple(self):
        grad = metric_gradient(WtaMetric.l2(), (1.0, 0.0), (0.0, 0.0))
        np.testing.assert_array_equal(grad, [2.0, 0.0])

    def test_ldp_subgradient_at_zero(self):
        grad = metric_gradient(WtaMetric.ldp(0.3), (1.0, -2.0), (1.0, -2.0))
        np.testing.assert_array_equal(grad, [0.0, 0.0])

    def test_ldp_three_four_five(self):
        grad = metric_gradient(WtaMetric.ldp(0.01), (3.0, 4.0), (0.0, 0.0))
        expected = np.array([3.0, 4.0]) / (5.0 * 5.01)
        np.testing.assert_allclose(grad, expected, rtol=1e-12)
        np.testing.assert_allclose(grad, [0.119760, 0.159681], atol=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            metric_gradient(WtaMetric.l2(), (1.0, 2.0), (1.0,))

    @pytest.mark.parametrize("metric", [WtaMetric.l2(), WtaMetric.ldp(0.05)])
    def test_matches_finite_differences(self, metric):
        rng = np.random.default_rng(29)
        for _ in range(200):
            dim = int(rng.integers(1, 6))
            a = rng.standard_normal(dim)
            b = rng.standard_normal(dim)
            if np.linalg.norm(a - b) < 1e-2:
                continue
            grad = metric_gradient(metric, a, b)
            oracle = central_difference(lambda p: distance(metric, p, b), a)
            denom = np.maximum(np.abs(oracle), np.abs(grad))
            denom = np.maximum(denom, 1e-12)
            assert np.max(np.abs(grad - oracle) / denom) < 1e-6


class TestWtaMetricType:
    def test_kind_validation(self):
        with pytest.raises(ValueError, match="metric kind"):
            WtaMetric(kind="manhattan")

    def test_ldp_delta_validation(self):
        with pytest.raises(ValueError, match="delta"):
            WtaMetric.ldp(0.0)

    def test_factories(self):
        assert WtaMetric.l2().kind == "l2"
        assert WtaMetric.ldp(0.2) == WtaMetric("ldp", 0.2)


class TestMetricDistances:
    def test_matches_scalar_bitwise(self):
        rng = np.random.default_rng(5)
        for metric in (WtaMetric.l2(), WtaMetric.ldp(0.07)):
            points = rng.standard_normal((64, 3))
            y = rng.standard_normal(3)
            batched = metric_distances(metric, points, y)
            singles = np.array([distance(metric, p, y) for p in points])
            np.testing.assert_array_equal(batched, singles)


class TestNearestIndices:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(17)
        refs = rng.standard_normal((40, 2))
        points = rng.standard_normal((500, 2))
        got = nearest_indices(points, refs)
        diffs = points[:, None, :] - refs[None, :, :]
        expected = np.argmin((diffs ** 2).sum(-1), axis=1)
        np.testing.assert_array_equal(got, expected)

    def test_duplicate_refs_lowest_index(self):
        refs = np.array([[1.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
        points = np.array([[1.1, 0.9], [0.0, 0.0]])
        np.testing.assert_array_equal(nearest_indices(points, refs), [0, 0])

    def test_chunked_path_matches(self):
        rng = np.random.default_rng(19)
        refs = rng.standard_normal((10, 3))
        points = rng.standard_normal((1000, 3))
        np.testing.assert_array_equal(nearest_indices(points, refs, chunk=64),
                                      nearest_indices(points, refs))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            nearest_indices(np.zeros((3, 2)), np.zeros((4, 3)))


class TestDefaultDelta:
    def test_fraction_of_known_diameter(self):
        pts = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 1.0]])
        assert default_delta(pts) == pytest.approx(1e-3 * 5.0)

    def test_subsample_is_deterministic(self):
        rng = np.random.default_rng(23)
        pts = rng.standard_normal((5000, 2))
        assert default_delta(pts) == default_delta(pts)

    def test_degenerate_cloud_falls_back(self):
        pts = np.ones((10, 2))
        assert default_delta(pts) == pytest.approx(1e-3)
