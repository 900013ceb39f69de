import math

import numpy as np
import pytest

from lwcp.dgp import DgpSpec
from lwcp.oracles import (
    OracleReport,
    classical_halfwidth,
    gaussian_recovery_ratio,
    mc_coverage,
    normal_quantile,
    variance_mismatch_check,
)


def series_cdf(x: float) -> float:
    """Phi(x) from the Maclaurin series of erf; independent of math.erf."""
    t = x / math.sqrt(2.0)
    term, total, k = t, t, 0
    while abs(term) > 1e-17 * max(1.0, abs(total)):
        k += 1
        term *= -t * t / k
        total += term / (2 * k + 1)
    return 0.5 + total / math.sqrt(math.pi)


def bisect_quantile(q: float) -> float:
    lo, hi = -8.0, 8.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if series_cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class TestNormalQuantile:
    @pytest.mark.parametrize("q", [0.5, 0.9, 0.95, 0.975, 0.995])
    def test_cdf_roundtrip(self, q):
        assert abs(series_cdf(normal_quantile(q)) - q) < 1e-8

    @pytest.mark.parametrize("q", [1e-3, 0.01, 0.3, 0.7, 0.99, 1 - 1e-3])
    def test_against_bisection(self, q):
        assert normal_quantile(q) == pytest.approx(bisect_quantile(q), abs=1e-9)

    def test_far_tail(self):
        # the erf series cancels badly this far out; compare to a tabulated value
        assert normal_quantile(1 - 1e-6) == pytest.approx(4.753424308822899, abs=1e-9)
        assert normal_quantile(1e-6) == pytest.approx(-4.753424308822899, abs=1e-9)

    def test_symmetry(self):
        for q in (0.01, 0.2, 0.4):
            assert normal_quantile(q) == pytest.approx(-normal_quantile(1 - q), abs=1e-12)

    @pytest.mark.parametrize("q", [0.0, 1.0, -1.0])
    def test_domain(self, q):
        with pytest.raises(ValueError):
            normal_quantile(q)


class TestClassicalHalfwidth:
    def test_unit_quantile(self):
        alpha = 2 * (1 - series_cdf(1.0))
        assert alpha == pytest.approx(0.31731, abs=1e-5)
        assert classical_halfwidth(1.0, alpha, 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_h3_doubles(self):
        assert classical_halfwidth(1.0, 0.1, 3.0) == pytest.approx(
            2 * classical_halfwidth(1.0, 0.1, 0.0)
        )

    def test_z95(self):
        assert classical_halfwidth(1.0, 0.1, 0.0) == pytest.approx(
            bisect_quantile(0.95), abs=1e-4
        )
        assert classical_halfwidth(1.0, 0.1, 0.0) == pytest.approx(1.6449, abs=1e-4)


def test_report_pass_flag():
    assert OracleReport("a", 1.25, 1.0, 0.25).passed
    assert not OracleReport("a", 1.5, 1.0, 0.25).passed
    assert OracleReport("a", 1.0, 1.0, 0.0).line().startswith("[PASS]")


class TestMcCoverage:
    def test_vanilla_homoscedastic(self):
        r = mc_coverage("vanilla", DgpSpec("homoscedastic"), 500)
        assert r.passed, r.line()

    def test_lwcp_adversarial(self):
        r = mc_coverage("lwcp:inverse_root", DgpSpec("adversarial"), 200)
        assert r.passed, r.line()

    def test_power_law_textbook(self):
        r = mc_coverage("lwcp:power_law:1", DgpSpec("textbook"), 200)
        assert r.passed, r.line()

    def test_min_reps(self):
        with pytest.raises(ValueError):
            mc_coverage("vanilla", DgpSpec(), 99)


class TestVarianceMismatch:
    def test_slopes(self):
        train, test = variance_mismatch_check(200, 20, reps=500)
        assert train.passed, train.line()
        assert test.passed, test.line()
        # residuals are shrunk, prediction errors inflated
        assert train.observed < test.observed

    def test_intercept_only(self):
        train, test = variance_mismatch_check(50, 0, reps=2000)
        assert train.observed == pytest.approx(1 - 1 / 50, abs=0.02)
        assert test.observed == pytest.approx(1 + 1 / 50, abs=0.02)

    def test_scale_equivariance(self):
        a = variance_mismatch_check(100, 10, sigma=1.0, reps=100)
        b = variance_mismatch_check(100, 10, sigma=2.0, reps=100)
        for x, y in zip(a, b):
            assert y.expected == 4 * x.expected
            assert y.observed == pytest.approx(4 * x.observed, rel=1e-12)
            assert y.passed

    def test_requires_n1_above_p(self):
        with pytest.raises(ValueError):
            variance_mismatch_check(10, 10)


class TestGaussianRecovery:
    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            gaussian_recovery_ratio(49, 10)

    @pytest.mark.slow
    def test_monotone_in_n(self):
        ratios = [gaussian_recovery_ratio(n, 200) for n in (50, 100, 200, 500, 1000)]
        assert all(b <= a + 0.01 for a, b in zip(ratios, ratios[1:])), ratios
        assert ratios[0] > ratios[-1] + 0.05
