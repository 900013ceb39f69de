import numpy as np
import pytest

from lwcp.metrics import (
    RunMetrics,
    aggregate,
    compute_metrics,
    decile_coverage,
    marginal_metrics,
    width_ratio,
)


class TestComputeMetrics:
    def test_all_covered(self, rng):
        h = rng.uniform(0, 1, 100)
        m = compute_metrics(np.ones(100, bool), np.full(100, 2.0), h, 0.1)
        assert m.marginal_coverage == 1.0
        assert m.max_decile_gap == m.extreme_gap == m.median_split_gap == 0.0
        assert m.mscce == pytest.approx(0.01)
        assert m.mean_width == 2.0

    def test_alternating(self, rng):
        n = 100_000
        h = rng.uniform(0, 1, n)
        covered = np.arange(n) % 2 == 0
        m = compute_metrics(covered, np.ones(n), h, 0.1)
        np.testing.assert_allclose(m.decile_coverage, 0.5, atol=0.02)
        assert m.mscce == pytest.approx(0.16, abs=0.01)

    def test_bin_partition(self, rng):
        n = 1003
        h = rng.exponential(1, n)
        covered = rng.uniform(size=n) < 0.9
        bins = decile_coverage(covered, h)
        order = np.argsort(h, kind="stable")
        sizes = np.array([len(b) for b in np.array_split(order, 10)])
        assert sizes.sum() == n and np.ptp(sizes) <= 1
        assert abs(np.dot(bins, sizes) / n - covered.mean()) < 1e-12

    def test_gap_dominance(self, rng):
        h = rng.exponential(1, 500)
        m = compute_metrics(rng.uniform(size=500) < 0.8, np.ones(500), h, 0.1)
        d = m.decile_coverage
        assert m.max_decile_gap >= np.max(np.abs(d[:, None] - d[None, :])) - 1e-15
        assert m.max_decile_gap >= m.extreme_gap

    def test_mscce_zero_iff_exact(self):
        h = np.arange(100.0)
        covered = (np.arange(100) % 10) != 0  # exactly 9/10 in every decile
        m = compute_metrics(covered, np.ones(100), h, 0.1)
        assert m.mscce == pytest.approx(0.0, abs=1e-24)

    def test_leverage_ordered_gap(self):
        h = np.arange(100.0)
        covered = h < 90  # top decile never covered
        m = compute_metrics(covered, np.ones(100), h, 0.1)
        assert m.extreme_gap == 1.0
        assert m.median_split_gap == pytest.approx(0.2)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            compute_metrics(np.ones(9, bool), np.ones(9), np.arange(9.0), 0.1)
        cov, width, n_inf = marginal_metrics(np.ones(3, bool), [1.0, np.inf, 3.0])
        assert (cov, width, n_inf) == (1.0, 2.0, 1)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            compute_metrics(np.ones(10, bool), np.ones(11), np.arange(10.0), 0.1)


class TestWidthRatio:
    def test_identical(self, rng):
        w = rng.uniform(1, 2, 50)
        assert width_ratio(w, w) == 1.0

    def test_double(self, rng):
        w = rng.uniform(1, 2, 50)
        assert width_ratio(2 * w, w) == pytest.approx(2.0)

    def test_infinite_rejected(self):
        with pytest.raises(ValueError):
            width_ratio([1.0, np.inf], [1.0, 1.0])


def _m(cov, gap=0.1):
    return RunMetrics(cov, 1.0, np.full(10, cov), gap, gap, gap, 0.0, 100)


class TestAggregate:
    def test_single(self):
        s = aggregate([_m(0.9)])
        assert s.mean["marginal_coverage"] == 0.9
        assert s.std["marginal_coverage"] == 0.0

    def test_identical(self):
        s = aggregate([_m(0.9), _m(0.9)])
        assert s.std["marginal_coverage"] == 0.0
        assert s.pooled_decile_gap == 0.0

    def test_sample_std(self):
        s = aggregate([_m(0.8), _m(1.0)])
        assert s.std["marginal_coverage"] == pytest.approx(np.sqrt(0.02))

    def test_pooled_curve(self):
        a = RunMetrics(0.9, 1, np.linspace(0.8, 1.0, 10), 0.2, 0.2, 0.1, 0, 100)
        b = RunMetrics(0.9, 1, np.linspace(1.0, 0.8, 10), 0.2, 0.2, 0.1, 0, 100)
        s = aggregate([a, b])
        assert s.mean["max_decile_gap"] == pytest.approx(0.2)
        assert s.pooled_decile_gap == pytest.approx(0.0, abs=1e-12)

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])
