"""Coverage, width and leverage-conditional coverage metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

N_BINS = 10


def _decile_bins(leverages) -> List[np.ndarray]:
    h = np.asarray(leverages, dtype=float)
    if h.size < N_BINS:
        raise ValueError(f"need at least {N_BINS} test points for decile metrics")
    order = np.argsort(h, kind="stable")
    return np.array_split(order, N_BINS)


def decile_coverage(covered, leverages) -> np.ndarray:
    """Coverage within 10 equal-count bins ordered by leverage."""
    c = np.asarray(covered, dtype=float)
    return np.array([c[idx].mean() for idx in _decile_bins(leverages)])


@dataclass(frozen=True)
class RunMetrics:
    marginal_coverage: float
    mean_width: float
    decile_coverage: np.ndarray
    max_decile_gap: float
    extreme_gap: float
    median_split_gap: float
    mscce: float
    n_test: int
    n_infinite: int = 0


def marginal_metrics(covered, widths):
    """Coverage, mean finite width and infinite-width count; no size minimum."""
    c = np.asarray(covered, dtype=bool)
    w = np.asarray(widths, dtype=float)
    finite = np.isfinite(w)
    mean_width = float(w[finite].mean()) if finite.any() else float("inf")
    return float(c.mean()), mean_width, int((~finite).sum())


def compute_metrics(covered, widths, test_leverages, alpha: float) -> RunMetrics:
    c = np.asarray(covered, dtype=bool)
    h = np.asarray(test_leverages, dtype=float)
    if not (c.shape == h.shape == np.shape(widths)):
        raise ValueError("covered, widths and leverages must have equal length")
    coverage, mean_width, n_inf = marginal_metrics(c, widths)
    bins = decile_coverage(c, h)
    low = h <= np.median(h)
    high = ~low
    if low.any() and high.any():
        split_gap = abs(c[low].mean() - c[high].mean())
    else:
        split_gap = 0.0
    return RunMetrics(
        marginal_coverage=coverage,
        mean_width=mean_width,
        decile_coverage=bins,
        max_decile_gap=float(bins.max() - bins.min()),
        extreme_gap=float(abs(bins[-1] - bins[0])),
        median_split_gap=float(split_gap),
        mscce=float(np.mean((bins - (1.0 - alpha)) ** 2)),
        n_test=int(c.size),
        n_infinite=n_inf,
    )


def width_ratio(lwcp_widths, vanilla_widths) -> float:
    a = np.asarray(lwcp_widths, dtype=float)
    b = np.asarray(vanilla_widths, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("width_ratio needs finite widths")
    denom = b.mean()
    if denom == 0:
        raise ValueError("vanilla mean width is zero")
    return float(a.mean() / denom)


SCALAR_FIELDS = (
    "marginal_coverage",
    "mean_width",
    "max_decile_gap",
    "extreme_gap",
    "median_split_gap",
    "mscce",
)


@dataclass(frozen=True)
class MetricsSummary:
    reps: int
    mean: Dict[str, float]
    std: Dict[str, float]
    decile_coverage: np.ndarray
    n_infinite: int

    @property
    def pooled_decile_gap(self) -> float:
        """Spread of the rep-averaged decile coverage curve."""
        return float(self.decile_coverage.max() - self.decile_coverage.min())


def aggregate(per_rep: Sequence[RunMetrics]) -> MetricsSummary:
    """Fieldwise mean and sample std across replications."""
    if not per_rep:
        raise ValueError("nothing to aggregate")
    mean, std = {}, {}
    for name in SCALAR_FIELDS:
        vals = np.array([getattr(m, name) for m in per_rep], dtype=float)
        mean[name] = float(vals.mean())
        std[name] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    curves = np.vstack([m.decile_coverage for m in per_rep])
    return MetricsSummary(
        reps=len(per_rep),
        mean=mean,
        std=std,
        decile_coverage=curves.mean(axis=0),
        n_infinite=sum(m.n_infinite for m in per_rep),
    )
