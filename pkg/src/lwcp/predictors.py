"""Point predictors (OLS, ridge) and the bagged-tree scale estimator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .leverage import SVD_RTOL


@dataclass(frozen=True)
class LinearModel:
    coefficients: np.ndarray
    intercept: float
    ridge_lambda: float = 0.0


def _centered_svd(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("design and targets have inconsistent shapes")
    intercept = float(y.mean())
    u, s, vt = np.linalg.svd(X, full_matrices=False)
    return u, s, vt, y - intercept, intercept


def fit_ols(std_design, targets) -> LinearModel:
    """Least squares on a column-centered design; intercept is mean(targets)."""
    X = np.asarray(std_design, dtype=float)
    n1, p = X.shape
    if n1 <= p:
        raise ValueError(f"OLS needs n1 > p (got n1={n1}, p={p}); use fit_ridge")
    u, s, vt, yc, intercept = _centered_svd(X, targets)
    if s[-1] < SVD_RTOL * s[0]:
        raise ValueError("rank-deficient design; use fit_ridge with lambda > 0")
    coef = vt.T @ ((u.T @ yc) / s)
    return LinearModel(coefficients=coef, intercept=intercept)


def fit_ridge(std_design, targets, lam: float) -> LinearModel:
    """Ridge solution (X'X + lam I)^-1 X'y computed in the SVD basis."""
    if lam <= 0:
        raise ValueError("ridge lambda must be positive")
    u, s, vt, yc, intercept = _centered_svd(std_design, targets)
    coef = vt.T @ ((s / (s**2 + lam)) * (u.T @ yc))
    return LinearModel(coefficients=coef, intercept=intercept, ridge_lambda=float(lam))


def predict(model: LinearModel, x_std):
    x = np.asarray(x_std, dtype=float)
    if x.shape[-1] != model.coefficients.shape[0]:
        raise ValueError(
            f"dimension mismatch: model has {model.coefficients.shape[0]} features, "
            f"input has {x.shape[-1]}"
        )
    out = model.intercept + x @ model.coefficients
    return float(out) if x.ndim == 1 else out


# ---------------------------------------------------------------------------
# Scale estimator: a small random forest on absolute training residuals.


@dataclass
class _Tree:
    # Flat arrays; feature == -1 marks a leaf.
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.value[node]


def _best_split(x: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best squared-error threshold on one feature, or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.size
    csum = np.cumsum(ys)
    csq = np.cumsum(ys**2)
    total, total_sq = csum[-1], csq[-1]
    # candidate split after position i (left = 0..i)
    i = np.arange(min_leaf - 1, n - min_leaf)
    if i.size == 0:
        return None
    valid = xs[i] < xs[i + 1]
    if not valid.any():
        return None
    i = i[valid]
    nl = i + 1.0
    nr = n - nl
    sse = (csq[i] - csum[i] ** 2 / nl) + (
        (total_sq - csq[i]) - (total - csum[i]) ** 2 / nr
    )
    j = int(np.argmin(sse))
    k = i[j]
    return float(sse[j]), 0.5 * (xs[k] + xs[k + 1])


def _grow_tree(X, y, max_depth, min_leaf, n_candidates, rng) -> _Tree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(v):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(v)
        return len(value) - 1

    root = new_node(float(y.mean()))
    stack = [(root, np.arange(y.size), 0)]
    p = X.shape[1]
    while stack:
        node, idx, depth = stack.pop()
        yi = y[idx]
        if depth >= max_depth or idx.size < 2 * min_leaf:
            continue
        parent_sse = float(np.sum((yi - yi.mean()) ** 2))
        if parent_sse <= 0.0:
            continue
        cands = rng.choice(p, size=n_candidates, replace=False)
        best = None
        for f in cands:
            res = _best_split(X[idx, f], yi, min_leaf)
            if res is not None and (best is None or res[0] < best[0]):
                best = (res[0], int(f), res[1])
        if best is None or best[0] >= parent_sse:
            continue
        _, f, thr = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        ln = new_node(float(y[li].mean()))
        rn = new_node(float(y[ri].mean()))
        feature[node], threshold[node] = f, thr
        left[node], right[node] = ln, rn
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))

    return _Tree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value, dtype=float),
    )


@dataclass
class ScaleEstimator:
    trees: List[_Tree] = field(repr=False)
    tree_count: int
    max_depth: int
    min_leaf: int
    floor: float

    def predict(self, X) -> np.ndarray:
        return predict_scale(self, X)


def fit_scale_estimator(
    train_features,
    abs_residuals,
    tree_count: int = 10,
    max_depth: int = 6,
    min_leaf: int = 5,
    rng_seed: int = 0,
) -> ScaleEstimator:
    """Bagged regression trees on |residual|, with sqrt(p) features per split.

    Tree ``t`` draws its bootstrap and feature subsets from a generator seeded
    with ``(rng_seed, t)``, so forests are reproducible tree by tree.
    """
    X = np.asarray(train_features, dtype=float)
    y = np.asarray(abs_residuals, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("features and residuals have inconsistent shapes")
    if np.any(y < 0):
        raise ValueError("abs_residuals must be nonnegative")
    n, p = X.shape
    n_candidates = max(1, int(np.sqrt(p)))
    med = float(np.median(y))
    floor = 1e-6 * med if med > 0 else 1e-12
    depth = max_depth if n >= 2 * min_leaf else 0
    trees = []
    for t in range(tree_count):
        rng = np.random.Generator(np.random.PCG64([rng_seed & 0xFFFFFFFFFFFFFFFF, t]))
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[boot], y[boot], depth, min_leaf, n_candidates, rng))
    return ScaleEstimator(
        trees=trees,
        tree_count=tree_count,
        max_depth=max_depth,
        min_leaf=min_leaf,
        floor=floor,
    )


def predict_scale(est: ScaleEstimator, x):
    x = np.asarray(x, dtype=float)
    X = x[None, :] if x.ndim == 1 else x
    pred = np.mean([tree.predict(X) for tree in est.trees], axis=0)
    pred = np.maximum(pred, est.floor)
    return float(pred[0]) if x.ndim == 1 else pred
