"""Independent reference computations used to cross-check the pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import INVERSE_ROOT, build_interval, calibrate
from .dgp import DgpSpec, derive_rep_seed, generate
from .leverage import apply_standardizer, fit_leverage, fit_standardizer, leverage_of
from .predictors import fit_ols, predict

# Acklam's rational approximation to the standard normal quantile.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_quantile(q: float) -> float:
    """Standard normal quantile: Acklam's approximation plus one Halley step."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {q}")
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        x = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        )
    elif q <= 1.0 - _P_LOW:
        u = q - 0.5
        r = u * u
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    else:
        t = math.sqrt(-2.0 * math.log(1.0 - q))
        x = -(((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / (
            (((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0
        )
    e = normal_cdf(x) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def classical_halfwidth(sigma: float, alpha: float, h: float) -> float:
    """Gaussian OLS prediction half-width sigma * z_{1-alpha/2} * sqrt(1 + h)."""
    return sigma * normal_quantile(1.0 - alpha / 2.0) * math.sqrt(1.0 + h)


@dataclass(frozen=True)
class OracleReport:
    name: str
    observed: float
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.observed - self.expected) <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: observed={self.observed:.5f} "
            f"expected={self.expected:.5f} tol={self.tolerance:.5f}"
        )


def coverage_se(alpha: float, reps: int, n2: int, n_test: int) -> float:
    """Standard error of mean coverage over reps.

    Per-rep coverage varies through the test draws (binomial) and through the
    calibration quantile (a Beta-distributed coverage level, variance about
    alpha(1-alpha)/(n2+2)).
    """
    var = alpha * (1 - alpha) * (1.0 / n_test + 1.0 / (n2 + 2))
    return math.sqrt(var / reps)


def mc_coverage(method: str, spec: DgpSpec, reps: int, alpha: float = 0.1,
                master_seed: int = 1, ridge_lambda: float = 0.0) -> OracleReport:
    """Empirical coverage of ``method`` on fresh test points across reps."""
    from .harness.config import ExperimentConfig
    from .harness.runner import run_replications

    if reps < 100:
        raise ValueError("mc_coverage needs at least 100 reps")
    exp = ExperimentConfig(
        id="mc", dgp=spec, methods=(method,), alpha=alpha, reps=reps,
        master_seed=master_seed, ridge_lambda=ridge_lambda,
    ).validate()
    outcomes = run_replications(exp)
    cov = float(np.mean([o.metrics[method].marginal_coverage for o in outcomes]))
    tol = 1.0 / (spec.n2 + 1) + 3.0 * coverage_se(alpha, reps, spec.n2, spec.n_test)
    return OracleReport(f"coverage {method} on {spec.family}", cov, 1 - alpha, tol)


def variance_mismatch_check(n1: int, p: int, sigma: float = 1.0, reps: int = 500,
                            seed: int = 11, n_test: int = 200):
    """Regress squared train residuals on (1 - h) and test errors on (1 + h).

    Both through-origin slopes should recover sigma^2 under homoscedastic
    Gaussian noise. ``p = 0`` is the intercept-only model (h = 0).
    """
    if n1 <= p:
        raise ValueError("variance_mismatch_check needs n1 > p")
    num_tr = den_tr = num_te = den_te = 0.0
    for rep in range(reps):
        rng = np.random.Generator(np.random.PCG64(derive_rep_seed(seed, rep)))
        Xtr = rng.standard_normal((n1, p))
        Xte = rng.standard_normal((n_test, p))
        ytr = sigma * rng.standard_normal(n1)
        yte = sigma * rng.standard_normal(n_test)
        if p == 0:
            h_tr = np.zeros(n1)
            h_te = np.zeros(n_test)
            e_tr = ytr - ytr.mean()
            e_te = yte - ytr.mean()
        else:
            std = fit_standardizer(Xtr)
            model = fit_ols(std.matrix, ytr)
            lev = fit_leverage(std)
            Zte = apply_standardizer(std, Xte)
            h_tr = lev.train_leverages
            h_te = leverage_of(lev, Zte)
            e_tr = ytr - predict(model, std.matrix)
            e_te = yte - predict(model, Zte)
        a, b = 1.0 - h_tr, 1.0 + h_te
        num_tr += float(np.sum(e_tr**2 * a))
        den_tr += float(np.sum(a * a))
        num_te += float(np.sum(e_te**2 * b))
        den_te += float(np.sum(b * b))
    target = sigma**2
    return (
        OracleReport("train residual slope", num_tr / den_tr, target, 0.1 * target),
        OracleReport("test error slope", num_te / den_te, target, 0.1 * target),
    )


def gaussian_recovery_ratios(n: int, reps: int, alpha: float = 0.1, seed: int = 3,
                             n_test: int = 100) -> np.ndarray:
    """Per-rep mean of LWCP half-width / classical half-width (p = 5, sigma = 1).

    The ``n`` points are split evenly into training and calibration.
    """
    if n < 50:
        raise ValueError("gaussian recovery protocol needs n >= 50")
    n1 = n // 2
    z = normal_quantile(1 - alpha / 2)
    out = np.empty(reps)
    for rep in range(reps):
        data = generate(DgpSpec("gaussian_recovery", n1, n - n1, n_test, 5, 1.0,
                                derive_rep_seed(seed, rep)))
        std = fit_standardizer(data.train_x)
        model = fit_ols(std.matrix, data.train_y)
        lev = fit_leverage(std)
        Zc = apply_standardizer(std, data.calib_x)
        Zt = apply_standardizer(std, data.test_x)
        cal = calibrate(np.abs(data.calib_y - predict(model, Zc)),
                        leverage_of(lev, Zc), INVERSE_ROOT, alpha)
        h = leverage_of(lev, Zt)
        iv = build_interval(cal, predict(model, Zt), h)
        out[rep] = float(np.mean(iv.half_width / (z * np.sqrt(1.0 + h))))
    return out


def gaussian_recovery_ratio(n: int, reps: int, alpha: float = 0.1, seed: int = 3) -> float:
    return float(np.mean(gaussian_recovery_ratios(n, reps, alpha, seed)))
