import numpy as np
import pytest

from lwcp.dgp import FAMILIES, DgpSpec, derive_rep_seed, generate, splitmix64
from lwcp.leverage import apply_standardizer, fit_leverage, fit_standardizer, leverage_of


class TestSeeds:
    def test_deterministic(self):
        assert derive_rep_seed(7, 3) == derive_rep_seed(7, 3)

    def test_no_collisions(self):
        seeds = {derive_rep_seed(20240501, r) for r in range(10_001)}
        assert len(seeds) == 10_001

    def test_avalanche(self):
        assert derive_rep_seed(42, 0) != 42
        a, b = derive_rep_seed(42, 0), derive_rep_seed(43, 0)
        assert 16 <= bin(a ^ b).count("1") <= 48

    def test_splitmix_known_value(self):
        # first output of the reference splitmix64 generator seeded with 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF


class TestGenerate:
    @pytest.mark.parametrize("family", FAMILIES)
    def test_shapes_and_determinism(self, family):
        spec = DgpSpec(family, n1=40, n2=30, n_test=20, p=10, seed=5)
        a, b = generate(spec), generate(spec)
        p = 5 if family == "gaussian_recovery" else 10
        assert a.train_x.shape == (40, p)
        assert a.calib_x.shape == (30, p)
        assert a.test_y.shape == (20,)
        for f in ("train_x", "train_y", "calib_x", "calib_y", "test_x", "test_y"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))

    def test_seed_changes_draw(self):
        a = generate(DgpSpec(n1=40, n2=30, n_test=20, p=5, seed=1))
        b = generate(DgpSpec(n1=40, n2=30, n_test=20, p=5, seed=2))
        assert not np.array_equal(a.train_y, b.train_y)

    def test_polynomial_needs_p8(self):
        with pytest.raises(ValueError, match="p >= 8"):
            DgpSpec("polynomial", p=5)

    @pytest.mark.parametrize("bad", [dict(family="nope"), dict(n1=0), dict(p=0), dict(sigma=0)])
    def test_invalid_spec(self, bad):
        with pytest.raises(ValueError):
            DgpSpec(**bad)

    def test_high_dim_textbook_is_finite(self):
        d = generate(DgpSpec(n1=50, n2=20, n_test=20, p=100, seed=1))
        assert np.all(np.isfinite(d.train_y))


def _noise(d, beta):
    return d.test_y - d.test_x @ beta


class TestMoments:
    N = 100_000

    def test_homoscedastic_variance(self):
        d = generate(DgpSpec("homoscedastic", n1=50, n2=10, n_test=self.N, p=5, seed=1))
        e = _noise(d, np.full(5, 1 / np.sqrt(5)))
        assert abs(e.var() - 1.0) < 0.02

    def test_heavy_tailed_variance(self):
        # t3 has no fourth moment, so one 1e5 sample variance wanders by
        # +-0.1; pool 20 independent blocks instead.
        es = []
        for seed in range(20):
            d = generate(DgpSpec("heavy_tailed", n1=50, n2=10, n_test=self.N, p=5, seed=seed))
            es.append(_noise(d, np.full(5, 1 / np.sqrt(5))) / d.true_sigma_of_x)
        assert abs(np.concatenate(es).var() - 1.0) < 0.03

    def test_heavy_tailed_median(self):
        # upper quartile of t3 is 0.764892, so median(abs(t3) / sqrt(3)) = 0.4416
        d = generate(DgpSpec("heavy_tailed", n1=50, n2=10, n_test=self.N, p=5, seed=1))
        e = _noise(d, np.full(5, 1 / np.sqrt(5))) / d.true_sigma_of_x
        assert abs(np.median(np.abs(e)) - 0.764892 / np.sqrt(3)) < 0.01

    def test_column_variances(self):
        p = 8
        d = generate(DgpSpec("textbook", n1=50, n2=10, n_test=self.N, p=p, seed=3))
        v = d.test_x.var(axis=0)
        np.testing.assert_allclose(v, 1.0 / np.arange(1, p + 1), rtol=0.05)

    def test_polynomial_columns_standardized(self):
        d = generate(DgpSpec("polynomial", n1=50, n2=10, n_test=self.N, p=10, seed=4))
        np.testing.assert_allclose(d.test_x.mean(axis=0), 0.0, atol=0.02)
        np.testing.assert_allclose(d.test_x.var(axis=0), 1.0, rtol=0.05)

    def test_textbook_conditional_sd(self):
        p = 10
        spec = DgpSpec("textbook", n1=300, n2=10, n_test=self.N, p=p, seed=5)
        d = generate(spec)
        std = fit_standardizer(d.train_x)
        h = leverage_of(fit_leverage(std), apply_standardizer(std, d.test_x))
        e = _noise(d, np.full(p, 1 / np.sqrt(p)))
        order = np.argsort(h, kind="stable")
        for idx in np.array_split(order, 10):
            target = np.sqrt(np.mean(1.0 + h[idx]))
            assert abs(e[idx].std() / target - 1.0) < 0.05

    def test_adversarial_noise_formula(self):
        d = generate(DgpSpec("adversarial", n1=20, n2=10, n_test=50, p=4, seed=6))
        expected = np.sqrt((1 + np.sum(d.test_x**2, axis=1) / 4) / 2)
        np.testing.assert_allclose(d.true_sigma_of_x, expected)
