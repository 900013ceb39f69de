"""CSV ingestion for user-supplied regression datasets."""

from __future__ import annotations

import csv
import math

import numpy as np

from ..dgp import GeneratedData
from .config import DataError


def read_numeric_csv(path: str, target_column: str):
    """Return (features, target, feature_names) from a headered numeric CSV.

    Cells are stripped of whitespace and parsed with ``float``; anything else
    (including empty cells and non-finite values) is rejected with the row and
    column named.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DataError(f"{path}: missing target column {target_column!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path} row {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            values = []
            for name, cell in zip(header, row):
                try:
                    v = float(cell.strip())
                except ValueError:
                    raise DataError(
                        f"{path} row {lineno}: column {name!r} has non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path} row {lineno}: column {name!r} is not finite ({cell!r})"
                    )
                values.append(v)
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    t = header.index(target_column)
    names = [h for i, h in enumerate(header) if i != t]
    return np.delete(data, t, axis=1), data[:, t], names


def split_sizes(n: int, fractions) -> tuple:
    f1, f2, _ = fractions
    n1 = int(math.floor(round(f1 * n, 9)))
    n2 = int(math.floor(round(f2 * n, 9)))
    return n1, n2, n - n1 - n2


def split_rows(X, y, fractions, seed: int, name: str = "") -> GeneratedData:
    n, p = X.shape
    if n < p + 2:
        raise DataError(f"need at least p + 2 = {p + 2} rows, got {n}")
    n1, n2, n3 = split_sizes(n, fractions)
    if min(n1, n2, n3) < 1:
        raise DataError(f"split {fractions} of {n} rows leaves an empty block")
    # canonical row order first, so the split ignores the file's row order
    canon = np.lexsort(np.column_stack([X, y]).T[::-1])
    rng = np.random.Generator(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))
    perm = canon[rng.permutation(n)]
    a, b, c = perm[:n1], perm[n1 : n1 + n2], perm[n1 + n2 :]
    return GeneratedData(
        train_x=X[a], train_y=y[a],
        calib_x=X[b], calib_y=y[b],
        test_x=X[c], test_y=y[c],
        name=name,
    )


def ingest_csv(path, target_column, split_fractions=(0.4, 0.4, 0.2), seed=0):
    """Read ``path`` and shuffle-split it into train / calibration / test."""
    X, y, _ = read_numeric_csv(path, target_column)
    return split_rows(X, y, split_fractions, seed, name=str(path))
