"""Built-in experiment grids mirroring the desk-scale protocols."""

from __future__ import annotations

from typing import Callable, Dict, List

from ..dgp import DgpSpec
from .config import ConfigError, ExperimentConfig, RunConfig

TABLE_DGPS = ("textbook", "heavy_tailed", "polynomial", "homoscedastic", "adversarial")
BASE = dict(n1=300, n2=500, n_test=500, p=30)
PAIR = ("vanilla", "lwcp:inverse_root")


def _gap_p(family: str) -> int:
    # the homoscedastic gap is reported at p / n1 = 0.3
    return 90 if family == "homoscedastic" else 30


def table1() -> List[ExperimentConfig]:
    exps = []
    for fam in TABLE_DGPS:
        exps.append(ExperimentConfig(
            id=f"table1-{fam}-coverage", dgp=DgpSpec(fam, **BASE), methods=PAIR, reps=1000,
        ))
        exps.append(ExperimentConfig(
            id=f"table1-{fam}-gap",
            dgp=DgpSpec(fam, **{**BASE, "p": _gap_p(fam)}),
            methods=PAIR,
            reps=200,
        ))
    return exps


def conditional() -> List[ExperimentConfig]:
    return [
        ExperimentConfig(
            id=f"conditional-{fam}",
            dgp=DgpSpec(fam, **{**BASE, "p": _gap_p(fam)}),
            methods=PAIR,
            reps=200,
        )
        for fam in TABLE_DGPS
    ]


def gaussian_recovery() -> List[ExperimentConfig]:
    return [
        ExperimentConfig(
            id=f"gaussian-recovery-n{n}",
            dgp=DgpSpec("gaussian_recovery", n1=n // 2, n2=n - n // 2, n_test=200, p=5),
            methods=("lwcp:inverse_root",),
            reps=200,
        )
        for n in (50, 100, 200, 500, 1000, 2000, 5000)
    ]


def scaling() -> List[ExperimentConfig]:
    exps = []
    for p in (5, 20, 50, 100):
        for n in (200, 500, 1000, 2000, 5000):
            if n < 6 * p:
                continue
            exps.append(ExperimentConfig(
                id=f"scaling-p{p}-n{n}",
                dgp=DgpSpec("textbook", n1=n, n2=n, n_test=n, p=p),
                methods=PAIR,
                reps=100,
            ))
    return exps


def approx() -> List[ExperimentConfig]:
    exps = []
    for p in (10, 30, 50, 100):
        dgp = DgpSpec("textbook", **{**BASE, "p": p})
        exps.append(ExperimentConfig(
            id=f"approx-p{p}-exact", dgp=dgp, methods=PAIR, reps=200,
        ))
        for k in (p, p // 2, p // 4):
            exps.append(ExperimentConfig(
                id=f"approx-p{p}-k{k}", dgp=dgp, methods=("lwcp:inverse_root",),
                reps=200, truncation_rank=k,
            ))
    return exps


def ridge() -> List[ExperimentConfig]:
    return [
        ExperimentConfig(
            id=f"ridge-p{p}",
            dgp=DgpSpec("textbook", n1=100, n2=500, n_test=1000, p=p, ridge_lambda=1.0),
            methods=PAIR,
            reps=200,
            ridge_lambda=1.0,
        )
        for p in (50, 100, 200, 500)
    ]


def highdim() -> List[ExperimentConfig]:
    exps = []
    for gamma in (0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9):
        p = round(gamma * 300)
        exps.append(ExperimentConfig(
            id=f"highdim-g{gamma:g}",
            dgp=DgpSpec("textbook", **{**BASE, "p": p}),
            methods=PAIR,
            reps=50,
        ))
    for gamma in (1.0, 1.5, 2.0, 5.0, 10.0):
        p = round(gamma * 300)
        exps.append(ExperimentConfig(
            id=f"highdim-ridge-g{gamma:g}",
            dgp=DgpSpec("textbook", **{**BASE, "p": p, "ridge_lambda": 1.0}),
            methods=PAIR,
            reps=20,
            ridge_lambda=1.0,
        ))
    return exps


def weight_select() -> List[ExperimentConfig]:
    # 50/25/25 split of the non-test data: the calibration block is halved
    # into validation and the final calibration set
    return [
        ExperimentConfig(
            id=f"weight-select-{fam}",
            dgp=DgpSpec(fam, n1=300, n2=300, n_test=1000, p=30),
            methods=("vanilla", "lwcp:inverse_root", "lwcp:auto"),
            reps=20,
        )
        for fam in TABLE_DGPS
    ]


PRESETS: Dict[str, Callable[[], List[ExperimentConfig]]] = {
    "table1": table1,
    "conditional": conditional,
    "gaussian-recovery": gaussian_recovery,
    "scaling": scaling,
    "approx": approx,
    "ridge": ridge,
    "highdim": highdim,
    "weight-select": weight_select,
}


def preset(name: str) -> RunConfig:
    try:
        exps = PRESETS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"
        ) from None
    return RunConfig(experiments=tuple(e.validate() for e in exps))
