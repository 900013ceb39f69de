"""Weight functions, conformal calibration and interval construction.

One scoring rule covers all four methods::

    score = |y - f(x)| * w(h(x)) / sigma(x)

vanilla:     w = 1, sigma = 1
lwcp:        sigma = 1
studentized: w = 1, sigma fitted
lwcp_plus:   both
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

METHODS = ("vanilla", "lwcp", "studentized", "lwcp_plus")
WEIGHT_KINDS = ("constant", "inverse_root", "power_law", "variance_stabilized")


@dataclass(frozen=True)
class WeightSpec:
    kind: str = "constant"
    gamma: Optional[float] = None
    g: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    h_clamp: float = 1e-6
    multiplier: float = 1.0
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == "power_law" and not (self.gamma and self.gamma > 0):
            raise ValueError("power_law weight needs gamma > 0")
        if self.kind == "variance_stabilized" and self.g is None:
            raise ValueError("variance_stabilized weight needs a variance function g")
        if not self.multiplier > 0:
            raise ValueError("weight multiplier must be positive")

    def __call__(self, h):
        return eval_weight(self, h)

    def __mul__(self, c: float) -> "WeightSpec":
        return WeightSpec(
            self.kind, self.gamma, self.g, self.h_clamp, self.multiplier * c, self.name
        )

    __rmul__ = __mul__

    @property
    def label(self) -> str:
        if self.name:
            base = self.name
        elif self.kind == "power_law":
            base = f"power_law:{self.gamma:g}"
        else:
            base = self.kind
        return base if self.multiplier == 1.0 else f"{self.multiplier:g}*{base}"


CONSTANT = WeightSpec("constant")
INVERSE_ROOT = WeightSpec("inverse_root")


def power_law(gamma: float, h_clamp: float = 1e-6) -> WeightSpec:
    return WeightSpec("power_law", gamma=gamma, h_clamp=h_clamp)


def variance_stabilized(g: Callable, name: Optional[str] = None) -> WeightSpec:
    """Weight 1/sqrt(g(h)) for a known variance profile g."""
    return WeightSpec("variance_stabilized", g=g, name=name)


def shifted_power(gamma: float) -> WeightSpec:
    """(1 + h)^(-gamma); gamma = 1/2 reproduces the inverse-root weight."""
    return variance_stabilized(
        lambda h: (1.0 + h) ** (2.0 * gamma), name=f"shifted_power:{gamma:g}"
    )


def eval_weight(spec: WeightSpec, h):
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("leverage must be nonnegative")
    if spec.kind == "constant":
        w = np.ones_like(h)
    elif spec.kind == "inverse_root":
        w = 1.0 / np.sqrt(1.0 + h)
    elif spec.kind == "power_law":
        w = np.maximum(h, spec.h_clamp) ** (-spec.gamma)
    else:
        gh = np.asarray(spec.g(h), dtype=float)
        if np.any(~(gh > 0)):
            raise ValueError("variance function g(h) must be positive")
        w = 1.0 / np.sqrt(gh)
    if spec.multiplier != 1.0:
        w = w * spec.multiplier
    return float(w) if w.ndim == 0 else w


def conformal_index(alpha: float, n2: int) -> Optional[int]:
    """1-based rank ceil((1 - alpha)(n2 + 1)); None when it exceeds n2."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if n2 < 1:
        raise ValueError("n2 must be at least 1")
    # round before ceil so that e.g. 0.9 * 10 does not become 9.000000000000002
    k = math.ceil(round((1.0 - alpha) * (n2 + 1), 9))
    return k if k <= n2 else None


@dataclass(frozen=True)
class CalibrationResult:
    sorted_scores: np.ndarray
    q_hat: float
    alpha: float
    n2: int
    method: str
    weight: WeightSpec
    infinite: bool


def _resolve_method(method, weight, scales):
    if method is None:
        if scales is None:
            method = "vanilla" if weight.kind == "constant" else "lwcp"
        else:
            method = "studentized" if weight.kind == "constant" else "lwcp_plus"
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    return method


def calibrate(
    residuals_abs,
    leverages,
    weight: WeightSpec = CONSTANT,
    alpha: float = 0.1,
    scales=None,
    method: Optional[str] = None,
) -> CalibrationResult:
    r = np.asarray(residuals_abs, dtype=float)
    h = np.asarray(leverages, dtype=float)
    n2 = r.shape[0]
    if n2 == 0:
        raise ValueError("calibration set is empty")
    if h.shape != r.shape:
        raise ValueError("residuals and leverages must have equal length")
    if np.any(r < 0):
        raise ValueError("residuals_abs must be nonnegative")
    method = _resolve_method(method, weight, scales)
    scores = r * eval_weight(weight, h)
    if scales is not None:
        s = np.asarray(scales, dtype=float)
        if s.shape != r.shape:
            raise ValueError("scales must match residuals in length")
        if np.any(~(s > 0)):
            raise ValueError("scales must be positive")
        scores = scores / s
    elif method in ("studentized", "lwcp_plus"):
        raise ValueError(f"method {method} requires scales")
    scores = np.sort(scores, kind="stable")
    k = conformal_index(alpha, n2)
    q_hat = math.inf if k is None else float(scores[k - 1])
    return CalibrationResult(
        sorted_scores=scores,
        q_hat=q_hat,
        alpha=alpha,
        n2=n2,
        method=method,
        weight=weight,
        infinite=k is None,
    )


@dataclass(frozen=True)
class PredictionInterval:
    """Symmetric interval; fields are scalars or equal-length arrays."""

    center: object
    half_width: object
    leverage: object
    extrapolation_flag: object

    @property
    def lower(self):
        return np.subtract(self.center, self.half_width)

    @property
    def upper(self):
        return np.add(self.center, self.half_width)


def build_interval(
    calib: CalibrationResult,
    center,
    h,
    sigma_hat=None,
    calib_p99: float = math.inf,
) -> PredictionInterval:
    center = np.asarray(center, dtype=float)
    h = np.asarray(h, dtype=float)
    if calib.method in ("studentized", "lwcp_plus"):
        if sigma_hat is None:
            raise ValueError(f"method {calib.method} requires sigma_hat")
        sigma = np.asarray(sigma_hat, dtype=float)
        if np.any(~(sigma > 0)):
            raise ValueError("sigma_hat must be positive")
    elif sigma_hat is not None:
        raise ValueError(f"method {calib.method} takes no sigma_hat")
    else:
        sigma = 1.0
    w = eval_weight(calib.weight, h)
    if calib.infinite:
        half = np.full(np.broadcast(center, h).shape, math.inf)
    else:
        half = calib.q_hat * sigma / w
    flag = h > calib_p99

    def out(a):
        a = np.asarray(a)
        return a.item() if a.ndim == 0 else a

    return PredictionInterval(out(center), out(half), out(h), out(flag))


def covers(interval: PredictionInterval, y):
    """Closed-interval membership; infinite half-widths always cover."""
    hit = np.abs(np.asarray(y, dtype=float) - interval.center) <= interval.half_width
    return bool(hit) if np.ndim(hit) == 0 else hit


@dataclass(frozen=True)
class ScoreInputs:
    """Residuals, leverages and optional sigma-hat for one index set."""

    residuals_abs: np.ndarray
    leverages: np.ndarray
    scales: Optional[np.ndarray] = None


def select_weight(
    validation: ScoreInputs,
    calib_remainder: ScoreInputs,
    candidates: Sequence[WeightSpec],
    alpha: float = 0.1,
    metric: str = "mscce",
):
    """Pick the candidate with the lowest validation MSCE, then recalibrate.

    The chosen weight never sees ``calib_remainder``, so the final quantile
    keeps the usual finite-sample guarantee. Ties go to the earliest candidate.
    """
    from .metrics import decile_coverage

    if not candidates:
        raise ValueError("candidate list is empty")
    if metric != "mscce":
        raise ValueError(f"unsupported selection metric {metric!r}")
    best, best_score = None, math.inf
    for cand in candidates:
        cal = calibrate(
            validation.residuals_abs, validation.leverages, cand, alpha, validation.scales
        )
        sigma = 1.0 if validation.scales is None else validation.scales
        if cal.infinite:
            score = alpha**2
        else:
            half = cal.q_hat * sigma / eval_weight(cand, validation.leverages)
            covered = validation.residuals_abs <= half
            bins = decile_coverage(covered, validation.leverages)
            score = float(np.mean((bins - (1 - alpha)) ** 2))
        if score < best_score:
            best, best_score = cand, score
    final = calibrate(
        calib_remainder.residuals_abs,
        calib_remainder.leverages,
        best,
        alpha,
        calib_remainder.scales,
    )
    return best, final
