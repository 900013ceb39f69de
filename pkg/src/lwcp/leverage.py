"""Feature standardization and leverage scores.

Leverage is always computed in the basis of the thin SVD of the standardized
training design, so ordinary, ridge and rank-truncated scores share one code
path.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

# Relative singular-value cutoff: sigma_j < SVD_RTOL * sigma_1 is treated as zero.
SVD_RTOL = 1e-12


@dataclass(frozen=True)
class StandardizedDesign:
    """Column means/scales of a training design and the standardized matrix."""

    means: np.ndarray
    scales: np.ndarray
    matrix: np.ndarray

    @property
    def n_features(self) -> int:
        return self.means.shape[0]


def fit_standardizer(train_design) -> StandardizedDesign:
    """Standardize columns with training statistics (population SD).

    Constant columns keep scale 1, so they become all-zero after centering.
    """
    X = np.asarray(train_design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("empty design")
    means = X.mean(axis=0)
    centered = X - means
    scales = np.sqrt(np.mean(centered**2, axis=0))
    # tolerance relative to the column magnitude catches float noise on constants
    tiny = scales <= 1e-14 * np.maximum(1.0, np.abs(means))
    scales = np.where(tiny, 1.0, scales)
    centered[:, tiny] = 0.0
    return StandardizedDesign(means=means, scales=scales, matrix=centered / scales)


def apply_standardizer(std: StandardizedDesign, x) -> np.ndarray:
    """Standardize a point (1-D) or a batch of rows (2-D) with training stats."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != std.n_features:
        raise ValueError(
            f"dimension mismatch: expected {std.n_features} features, got {x.shape[-1]}"
        )
    return (x - std.means) / std.scales


@dataclass(frozen=True)
class LeverageModel:
    right_singular_vectors: np.ndarray  # p x r
    singular_values: np.ndarray  # r, descending
    ridge_lambda: float
    truncation_rank: int
    standardizer: Optional[StandardizedDesign]
    train_leverages: np.ndarray
    calib_p99: float = np.inf

    @property
    def rank(self) -> int:
        return self.singular_values.shape[0]

    def leverage(self, x_std) -> np.ndarray:
        return leverage_of(self, x_std)

    def with_calibration(self, calib_leverages) -> "LeverageModel":
        """Return a copy carrying the 99th percentile of calibration leverages."""
        p99 = float(np.quantile(np.asarray(calib_leverages, dtype=float), 0.99))
        return replace(self, calib_p99=p99)


def _thin_svd(matrix: np.ndarray):
    _, s, vt = np.linalg.svd(matrix, full_matrices=False)
    return s, vt.T


def _leverage_in_basis(V, s, lam, x):
    coords = x @ V
    if lam == 0.0:
        return np.sum((coords / s) ** 2, axis=-1)
    h = np.sum(coords**2 / (s**2 + lam), axis=-1)
    # energy outside the retained subspace sees only the ridge term
    residual = np.sum(x**2, axis=-1) - np.sum(coords**2, axis=-1)
    return h + np.maximum(residual, 0.0) / lam


def fit_leverage(
    std: StandardizedDesign,
    ridge_lambda: float = 0.0,
    truncation_rank: Optional[int] = None,
) -> LeverageModel:
    """Fit the thin-SVD leverage model on a standardized training design.

    ``truncation_rank=k`` keeps only the top-k singular triples (approximate
    leverage). ``ridge_lambda > 0`` gives ridge leverage x'(X'X + lam I)^-1 x.
    """
    if ridge_lambda < 0:
        raise ValueError("ridge_lambda must be nonnegative")
    X = std.matrix
    n1, p = X.shape
    if truncation_rank is not None:
        if not 1 <= truncation_rank <= min(n1, p):
            raise ValueError(
                f"truncation_rank must be in [1, {min(n1, p)}], got {truncation_rank}"
            )
    s, V = _thin_svd(X)
    if s.size == 0 or s[0] <= 0.0:
        keep = np.zeros(s.shape, dtype=bool)
    else:
        keep = s >= SVD_RTOL * s[0]
    if not keep.any() and ridge_lambda == 0.0:
        raise ValueError("rank-deficient design; use ridge_lambda > 0")
    s, V = s[keep], V[:, keep]
    if truncation_rank is not None and truncation_rank < s.size:
        s, V = s[:truncation_rank], V[:, :truncation_rank]
    train_h = _leverage_in_basis(V, s, float(ridge_lambda), X)
    return LeverageModel(
        right_singular_vectors=V,
        singular_values=s,
        ridge_lambda=float(ridge_lambda),
        truncation_rank=int(s.size),
        standardizer=std,
        train_leverages=train_h,
    )


def leverage_of(model: LeverageModel, x_std):
    """Leverage of already-standardized point(s); scalar for 1-D input."""
    x = np.asarray(x_std, dtype=float)
    h = _leverage_in_basis(
        model.right_singular_vectors, model.singular_values, model.ridge_lambda, x
    )
    return float(h) if x.ndim == 1 else h


def feature_leverage(train_features, x_features, ridge_lambda: float):
    """Ridge leverage phi(x)'(Phi'Phi + lam I)^-1 phi(x) in a raw feature space.

    No standardization is applied; ``ridge_lambda`` must be positive so the
    score is well posed for any feature dimension.
    """
    if ridge_lambda <= 0:
        raise ValueError("feature leverage requires ridge_lambda > 0")
    Phi = np.asarray(train_features, dtype=float)
    if Phi.ndim != 2 or Phi.shape[1] == 0:
        raise ValueError("train_features must be a non-empty 2-D matrix")
    s, V = _thin_svd(Phi)
    x = np.asarray(x_features, dtype=float)
    h = _leverage_in_basis(V, s, float(ridge_lambda), x)
    return float(h) if x.ndim == 1 else h


@dataclass(frozen=True)
class LeverageDiagnostics:
    eta_hat: float
    mean_h: float
    max_h: float
    p99_h: float
    gamma: float

    def recommendation(self) -> str:
        if self.eta_hat > 1.0:
            return "LWCP improves conditional coverage"
        if self.eta_hat < 0.5:
            return "vanilla CP suffices"
        return "moderate leverage heterogeneity; LWCP is a safe default"


def diagnostics(model: LeverageModel, leverages) -> LeverageDiagnostics:
    h = np.asarray(leverages, dtype=float)
    if h.size == 0:
        raise ValueError("leverages must be non-empty")
    mean_h = float(h.mean())
    sd = float(h.std(ddof=1)) if h.size > 1 and np.ptp(h) > 0 else 0.0
    eta = sd / mean_h if mean_h > 0 else 0.0
    std = model.standardizer
    if std is not None:
        n1, p = std.matrix.shape
        gamma = p / n1
    else:
        gamma = float("nan")
    return LeverageDiagnostics(
        eta_hat=eta,
        mean_h=mean_h,
        max_h=float(h.max()),
        p99_h=float(np.quantile(h, 0.99)),
        gamma=gamma,
    )
