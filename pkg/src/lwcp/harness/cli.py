"""Command-line entry point: ``lwcp run | diagnose | ingest-check``."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ..dgp import FAMILIES, DgpSpec, generate
from ..leverage import apply_standardizer, diagnostics, fit_leverage, fit_standardizer, leverage_of
from .config import ConfigError, DataError, RunConfig, load_config_file
from .data import read_numeric_csv, split_rows
from .presets import PRESETS, preset
from .runner import run_config, write_results

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lwcp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run experiments and write a result CSV")
    run.add_argument("--config", help="YAML experiment file")
    run.add_argument("--preset", choices=sorted(PRESETS), help="built-in experiment grid")
    run.add_argument("--seed", type=int, help="master seed for every experiment")
    run.add_argument("--reps", type=int, help="replications per experiment")
    run.add_argument("--out", help="output CSV path (stdout when omitted)")
    run.add_argument("--workers", type=int, help="worker processes")

    diag = sub.add_parser("diagnose", help="leverage heterogeneity diagnostic")
    src = diag.add_mutually_exclusive_group(required=True)
    src.add_argument("--csv", help="numeric CSV file")
    src.add_argument("--dgp", choices=FAMILIES, help="synthetic family")
    diag.add_argument("--target", help="target column (required with --csv)")
    diag.add_argument("--n1", type=int, default=300)
    diag.add_argument("--n2", type=int, default=500)
    diag.add_argument("--p", type=int, default=30)
    diag.add_argument("--ridge-lambda", type=float, default=0.0)
    diag.add_argument("--seed", type=int, default=0)

    chk = sub.add_parser("ingest-check", help="validate a CSV for ingestion")
    chk.add_argument("--csv", required=True)
    chk.add_argument("--target", help="target column (default: last column)")
    return parser


def _cmd_run(args) -> int:
    if args.config is None and args.preset is None:
        raise ConfigError("run needs --config and/or --preset")
    experiments = ()
    output, workers = None, 1
    if args.preset is not None:
        experiments += preset(args.preset).experiments
    if args.config is not None:
        cfg = load_config_file(args.config)
        experiments += cfg.experiments
        output, workers = cfg.output_path, cfg.worker_count
    ids = [e.id for e in experiments]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate experiment ids between preset and config")
    config = RunConfig(experiments, output, workers).override(
        seed=args.seed, reps=args.reps, out=args.out, workers=args.workers
    )
    if config.worker_count < 1:
        raise ConfigError("--workers must be >= 1")
    rows, timing = run_config(config)
    text, timing_path = write_results(rows, timing, config.output_path)
    if config.output_path is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {len(rows)} rows to {config.output_path} (timing: {timing_path})",
              file=sys.stderr)
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    if args.csv is not None:
        if not args.target:
            raise ConfigError("diagnose --csv needs --target")
        X, y, _ = read_numeric_csv(args.csv, args.target)
        data = split_rows(X, y, (0.4, 0.4, 0.2), args.seed, name=args.csv)
    else:
        try:
            spec = DgpSpec(args.dgp, n1=args.n1, n2=args.n2, n_test=0, p=args.p,
                           seed=args.seed, ridge_lambda=args.ridge_lambda)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        data = generate(spec)
    std = fit_standardizer(data.train_x)
    n1, p = std.matrix.shape
    lam = args.ridge_lambda
    if lam == 0 and p >= n1:
        raise ConfigError("p >= n1: pass --ridge-lambda > 0")
    try:
        lev = fit_leverage(std, lam)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    h = leverage_of(lev, apply_standardizer(std, data.calib_x))
    d = diagnostics(lev, np.atleast_1d(h))
    print(f"eta_hat     {d.eta_hat:.4f}")
    print(f"gamma       {d.gamma:.4f}")
    print(f"mean_h      {d.mean_h:.4f}")
    print(f"p99_h       {d.p99_h:.4f}")
    print(f"max_h       {d.max_h:.4f}")
    print(f"recommend   {d.recommendation()}")
    return EXIT_OK


def _cmd_ingest_check(args) -> int:
    with open(args.csv, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    target = args.target or header[-1].strip()
    X, y, names = read_numeric_csv(args.csv, target)
    print(f"rows        {X.shape[0]}")
    print(f"features    {X.shape[1]} ({', '.join(names)})")
    print(f"target      {target}")
    constant = [n for n, sd in zip(names, X.std(axis=0)) if sd == 0]
    if constant:
        print(f"constant    {', '.join(constant)}")
    if X.shape[0] < X.shape[1] + 2:
        raise DataError(f"need at least p + 2 = {X.shape[1] + 2} rows, got {X.shape[0]}")
    print("ok")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "diagnose": _cmd_diagnose,
        "ingest-check": _cmd_ingest_check,
    }[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
