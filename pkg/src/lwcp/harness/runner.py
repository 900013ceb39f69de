"""Replication runner and CSV result emission."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from ..conformal import ScoreInputs, build_interval, calibrate, covers, select_weight
from ..dgp import derive_rep_seed, generate, splitmix64
from ..leverage import (
    apply_standardizer,
    diagnostics,
    fit_leverage,
    fit_standardizer,
    leverage_of,
)
from ..metrics import RunMetrics, aggregate, compute_metrics
from ..oracles import normal_quantile
from ..predictors import fit_ols, fit_ridge, fit_scale_estimator, predict, predict_scale
from .config import ConfigError, DataError, ExperimentConfig, RunConfig
from .data import read_numeric_csv, split_rows

SCHEMA_VERSION = 1
# homoscedastic Gaussian linear families, where the classical interval is exact
CLASSICAL_FAMILIES = ("gaussian_recovery", "homoscedastic")


@dataclass
class RepOutcome:
    metrics: Dict[str, RunMetrics]
    eta_hat: float
    seconds: Dict[str, float]
    selected: Dict[str, str]
    classical_ratio: Dict[str, float]


def rep_data(exp: ExperimentConfig, rep_index: int, csv_cache=None):
    seed = derive_rep_seed(exp.master_seed, rep_index)
    if exp.dgp is not None:
        return generate(exp.dgp.with_seed(seed)), seed
    X, y = csv_cache if csv_cache is not None else read_numeric_csv(
        exp.csv.path, exp.csv.target_column
    )[:2]
    return split_rows(X, y, exp.csv.split_fractions, seed, name=exp.csv.path), seed


def run_rep(exp: ExperimentConfig, rep_index: int, csv_cache=None) -> RepOutcome:
    """One replication: fit, calibrate every method, score the test block."""
    data, seed = rep_data(exp, rep_index, csv_cache)
    t0 = time.perf_counter()
    std = fit_standardizer(data.train_x)
    Xtr = std.matrix
    Xc = apply_standardizer(std, data.calib_x)
    Xte = apply_standardizer(std, data.test_x)
    n1, p = Xtr.shape
    if exp.ridge_lambda > 0:
        model = fit_ridge(Xtr, data.train_y, exp.ridge_lambda)
    elif n1 > p:
        try:
            model = fit_ols(Xtr, data.train_y)
        except ValueError as exc:
            raise DataError(f"experiment {exp.id}: {exc}") from None
    else:
        raise ConfigError(f"experiment {exp.id}: p >= n1 requires ridge_lambda > 0")
    try:
        lev = fit_leverage(std, exp.ridge_lambda, exp.truncation_rank)
    except ValueError as exc:
        raise ConfigError(f"experiment {exp.id}: {exc}") from None
    h_cal = leverage_of(lev, Xc)
    h_te = leverage_of(lev, Xte)
    lev = lev.with_calibration(h_cal)
    r_cal = np.abs(data.calib_y - predict(model, Xc))
    center = predict(model, Xte)
    shared = time.perf_counter() - t0

    specs = exp.method_specs()
    scale = None
    scale_time = 0.0
    if any(m.needs_scale for m in specs):
        t1 = time.perf_counter()
        r_tr = np.abs(data.train_y - predict(model, Xtr))
        est = fit_scale_estimator(
            Xtr, r_tr, tree_count=exp.tree_count, rng_seed=splitmix64(seed ^ 0x5CA1E)
        )
        scale = (predict_scale(est, Xc), predict_scale(est, Xte))
        scale_time = time.perf_counter() - t1

    classical_sd = None
    if exp.dgp is not None and exp.dgp.family in CLASSICAL_FAMILIES:
        z = normal_quantile(1.0 - exp.alpha / 2.0)
        classical_sd = exp.dgp.sigma * z * np.sqrt(1.0 + h_te)

    metrics, seconds, selected, ratio = {}, {}, {}, {}
    for spec, label in zip(specs, exp.methods):
        t1 = time.perf_counter()
        s_cal, s_te = scale if spec.needs_scale else (None, None)
        if spec.auto:
            half = r_cal.size // 2
            weight, cal = select_weight(
                ScoreInputs(r_cal[:half], h_cal[:half]),
                ScoreInputs(r_cal[half:], h_cal[half:]),
                spec.candidates(),
                exp.alpha,
            )
            selected[label] = weight.label
        else:
            cal = calibrate(r_cal, h_cal, spec.weight, exp.alpha, s_cal, method=spec.method)
        iv = build_interval(cal, center, h_te, s_te, lev.calib_p99)
        half_width = np.asarray(iv.half_width)
        metrics[label] = compute_metrics(
            covers(iv, data.test_y), 2.0 * half_width, h_te, exp.alpha
        )
        if classical_sd is not None:
            ratio[label] = float(np.mean(half_width / classical_sd))
        seconds[label] = (
            shared + (scale_time if spec.needs_scale else 0.0) + time.perf_counter() - t1
        )
    eta = diagnostics(lev, h_cal).eta_hat
    return RepOutcome(metrics, eta, seconds, selected, ratio)


def _run_task(args):
    exp, rep_index, csv_cache = args
    with threadpool_limits(limits=1):
        return run_rep(exp, rep_index, csv_cache)


def _csv_cache(exp: ExperimentConfig):
    if exp.csv is None:
        return None
    X, y, _ = read_numeric_csv(exp.csv.path, exp.csv.target_column)
    return X, y


def run_replications(
    exp: ExperimentConfig, workers: int = 1, executor=None
) -> List[RepOutcome]:
    """All replications of one experiment, in rep-index order."""
    cache = _csv_cache(exp)
    tasks = [(exp, i, cache) for i in range(exp.reps)]
    if executor is not None:
        return list(executor.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [_run_task(t) for t in tasks]


COLUMNS = [
    "schema_version", "experiment_id", "dataset", "method", "weight", "alpha",
    "reps", "n1", "n2", "n_test", "p", "ridge_lambda", "truncation_rank",
    "coverage_mean", "coverage_std", "width_mean", "width_std", "width_ratio",
    "max_decile_gap_mean", "max_decile_gap_std", "pooled_decile_gap",
    "extreme_gap_mean", "extreme_gap_std", "median_split_gap_mean",
    "median_split_gap_std", "mscce_x1e3_mean", "mscce_x1e3_std",
] + [f"decile{i}_coverage" for i in range(1, 11)] + [
    "n_infinite", "eta_hat_mean", "classical_ratio_mean", "classical_ratio_std",
    "selected_weight", "selected_fraction",
]

TIMING_COLUMNS = ["experiment_id", "method", "reps", "time_ms_mean"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".6f")


def summarize(exp: ExperimentConfig, outcomes: Sequence[RepOutcome]):
    """ResultRows (as ordered dicts) plus timing rows for one experiment."""
    rows, timing = [], []
    dims = _dims(exp, outcomes)
    vanilla_width = None
    if "vanilla" in exp.methods:
        vanilla_width = aggregate([o.metrics["vanilla"] for o in outcomes]).mean["mean_width"]
    eta = float(np.mean([o.eta_hat for o in outcomes]))
    for spec, label in zip(exp.method_specs(), exp.methods):
        s = aggregate([o.metrics[label] for o in outcomes])
        ratio = None
        if vanilla_width is not None and np.isfinite(vanilla_width) and vanilla_width > 0:
            ratio = s.mean["mean_width"] / vanilla_width
        row = {
            "schema_version": SCHEMA_VERSION,
            "experiment_id": exp.id,
            "dataset": exp.dataset,
            "method": spec.method,
            "weight": spec.weight_label,
            "alpha": exp.alpha,
            "reps": s.reps,
            **dims,
            "ridge_lambda": exp.ridge_lambda,
            "truncation_rank": exp.truncation_rank,
            "coverage_mean": s.mean["marginal_coverage"],
            "coverage_std": s.std["marginal_coverage"],
            "width_mean": s.mean["mean_width"],
            "width_std": s.std["mean_width"],
            "width_ratio": ratio,
            "max_decile_gap_mean": s.mean["max_decile_gap"],
            "max_decile_gap_std": s.std["max_decile_gap"],
            "pooled_decile_gap": s.pooled_decile_gap,
            "extreme_gap_mean": s.mean["extreme_gap"],
            "extreme_gap_std": s.std["extreme_gap"],
            "median_split_gap_mean": s.mean["median_split_gap"],
            "median_split_gap_std": s.std["median_split_gap"],
            "mscce_x1e3_mean": 1e3 * s.mean["mscce"],
            "mscce_x1e3_std": 1e3 * s.std["mscce"],
            **{f"decile{i + 1}_coverage": v for i, v in enumerate(s.decile_coverage)},
            "n_infinite": s.n_infinite,
            "eta_hat_mean": eta,
            **_classical_fields(outcomes, label),
            **_selection_fields(outcomes, label),
        }
        rows.append({c: row.get(c) for c in COLUMNS})
        timing.append({
            "experiment_id": exp.id,
            "method": label,
            "reps": s.reps,
            "time_ms_mean": 1e3 * float(np.mean([o.seconds[label] for o in outcomes])),
        })
    return rows, timing


def _classical_fields(outcomes, label):
    vals = [o.classical_ratio[label] for o in outcomes if label in o.classical_ratio]
    if not vals:
        return {}
    return {
        "classical_ratio_mean": float(np.mean(vals)),
        "classical_ratio_std": float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0,
    }


def _selection_fields(outcomes, label):
    picks = [o.selected[label] for o in outcomes if label in o.selected]
    if not picks:
        return {}
    names, counts = np.unique(picks, return_counts=True)
    # most frequent; np.unique sorts names, so ties resolve alphabetically
    i = int(np.argmax(counts))
    return {"selected_weight": str(names[i]), "selected_fraction": counts[i] / len(picks)}


def _dims(exp, outcomes):
    if exp.dgp is not None:
        d = exp.dgp
        return {"n1": d.n1, "n2": d.n2, "n_test": d.n_test, "p": d.p}
    m = outcomes[0].metrics[exp.methods[0]]
    data, _ = rep_data(exp, 0)
    return {
        "n1": data.train_x.shape[0], "n2": data.calib_x.shape[0],
        "n_test": m.n_test, "p": data.train_x.shape[1],
    }


def run_experiment(exp: ExperimentConfig, workers: int = 1, executor=None):
    exp.validate()
    outcomes = run_replications(exp, workers, executor)
    return summarize(exp, outcomes)


def run_config(config: RunConfig):
    """Run every experiment; returns (rows, timing_rows)."""
    rows, timing = [], []
    workers = max(1, config.worker_count)
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for exp in config.experiments:
            r, t = run_experiment(exp, workers, executor)
            rows.extend(r)
            timing.extend(t)
    finally:
        if executor is not None:
            executor.shutdown()
    return rows, timing


def rows_to_csv(rows, columns=COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def write_results(rows, timing, path: Optional[str]) -> Tuple[str, Optional[str]]:
    """Write the result CSV and a ``.timing.csv`` sidecar; return the text."""
    text = rows_to_csv(rows)
    timing_path = None
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        timing_path = _timing_path(path)
        with open(timing_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(timing, TIMING_COLUMNS))
    return text, timing_path


def _timing_path(path: str) -> str:
    return (path[:-4] if path.endswith(".csv") else path) + ".timing.csv"
