"""Experiment configuration: YAML schema, validation and method parsing."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import yaml

from ..conformal import CONSTANT, INVERSE_ROOT, WeightSpec, power_law, shifted_power
from ..dgp import FAMILIES, DgpSpec


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DataError(ValueError):
    """Unusable input data (CLI exit code 3)."""


def parse_weight(text: str) -> WeightSpec:
    """``constant``, ``inverse_root``, ``power_law:G`` or ``shifted_power:G``."""
    name, _, arg = text.strip().partition(":")
    if name == "constant" and not arg:
        return CONSTANT
    if name == "inverse_root" and not arg:
        return INVERSE_ROOT
    if name in ("power_law", "shifted_power"):
        try:
            gamma = float(arg)
        except ValueError:
            raise ConfigError(f"weight {text!r}: expected a numeric exponent") from None
        if gamma <= 0:
            raise ConfigError(f"weight {text!r}: exponent must be positive")
        return power_law(gamma) if name == "power_law" else shifted_power(gamma)
    raise ConfigError(f"unknown weight {text!r}")


# Candidate weights for data-driven selection (``lwcp:auto``).
AUTO_CANDIDATES = (
    "constant",
    "inverse_root",
    "shifted_power:1",
    "shifted_power:0.25",
    "power_law:0.3",
)


@dataclass(frozen=True)
class MethodSpec:
    method: str
    weight: WeightSpec = CONSTANT
    auto: bool = False

    @property
    def weight_label(self) -> str:
        return "auto" if self.auto else self.weight.label

    def candidates(self) -> List[WeightSpec]:
        return [parse_weight(w) for w in AUTO_CANDIDATES]

    @property
    def needs_scale(self) -> bool:
        return self.method in ("studentized", "lwcp_plus")


def parse_method(text: str) -> MethodSpec:
    """``vanilla``, ``studentized``, ``lwcp[:weight]``, ``lwcp_plus[:weight]``.

    The weight defaults to inverse_root. ``lwcp:auto`` selects the weight on
    half of the calibration block and calibrates on the other half.
    """
    name, _, arg = text.strip().partition(":")
    if name in ("vanilla", "studentized"):
        if arg:
            raise ConfigError(f"method {name} takes no weight (got {text!r})")
        return MethodSpec(name, CONSTANT)
    if name == "lwcp" and arg == "auto":
        return MethodSpec("lwcp", INVERSE_ROOT, auto=True)
    if name in ("lwcp", "lwcp_plus"):
        return MethodSpec(name, parse_weight(arg) if arg else INVERSE_ROOT)
    raise ConfigError(f"unknown method {text!r}")


@dataclass(frozen=True)
class CsvSource:
    path: str
    target_column: str
    split_fractions: Tuple[float, float, float] = (0.4, 0.4, 0.2)


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    dgp: Optional[DgpSpec] = None
    csv: Optional[CsvSource] = None
    methods: Tuple[str, ...] = ("vanilla", "lwcp:inverse_root")
    alpha: float = 0.1
    reps: int = 100
    ridge_lambda: float = 0.0
    truncation_rank: Optional[int] = None
    master_seed: int = 20240501
    tree_count: int = 10

    def method_specs(self) -> List[MethodSpec]:
        return [parse_method(m) for m in self.methods]

    @property
    def dataset(self) -> str:
        if self.dgp is not None:
            return self.dgp.family
        return self.csv.path

    def validate(self) -> "ExperimentConfig":
        if (self.dgp is None) == (self.csv is None):
            raise ConfigError(f"experiment {self.id}: give exactly one of dgp / csv")
        if self.reps < 1:
            raise ConfigError(f"experiment {self.id}: reps must be >= 1")
        if not self.methods:
            raise ConfigError(f"experiment {self.id}: at least one method required")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"experiment {self.id}: alpha must be in (0, 1)")
        if self.ridge_lambda < 0:
            raise ConfigError(f"experiment {self.id}: ridge_lambda must be >= 0")
        if self.dgp is not None and self.dgp.p >= self.dgp.n1 and self.ridge_lambda == 0:
            raise ConfigError(
                f"experiment {self.id}: p >= n1 needs ridge_lambda > 0 (OLS is not identified)"
            )
        if self.truncation_rank is not None and self.truncation_rank < 1:
            raise ConfigError(f"experiment {self.id}: truncation_rank must be >= 1")
        self.method_specs()
        if self.csv is not None:
            fr = self.csv.split_fractions
            if len(fr) != 3 or any(f <= 0 for f in fr) or abs(sum(fr) - 1) > 1e-9:
                raise ConfigError(
                    f"experiment {self.id}: split_fractions must be 3 positives summing to 1"
                )
        return self


@dataclass(frozen=True)
class RunConfig:
    experiments: Tuple[ExperimentConfig, ...]
    output_path: Optional[str] = None
    worker_count: int = 1

    def override(self, *, seed=None, reps=None, out=None, workers=None) -> "RunConfig":
        exps = self.experiments
        if seed is not None:
            exps = tuple(replace(e, master_seed=seed) for e in exps)
        if reps is not None:
            exps = tuple(replace(e, reps=reps) for e in exps)
        return RunConfig(
            experiments=tuple(e.validate() for e in exps),
            output_path=out if out is not None else self.output_path,
            worker_count=workers if workers is not None else self.worker_count,
        )


_EXPERIMENT_KEYS = {
    "id", "dgp", "csv", "methods", "alpha", "reps", "ridge_lambda",
    "truncation_rank", "master_seed", "tree_count",
}
_DGP_KEYS = {"family", "n1", "n2", "n_test", "p", "sigma", "ridge_lambda"}
_CSV_KEYS = {"path", "target", "split"}


def _check_keys(where: str, mapping: dict, allowed: set):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _experiment_from_dict(d: dict, defaults: dict, index: int) -> ExperimentConfig:
    where = f"experiments[{index}]"
    _check_keys(where, d, _EXPERIMENT_KEYS)
    merged = {**defaults, **d}
    dgp = csv = None
    if merged.get("dgp") is not None:
        _check_keys(f"{where}.dgp", merged["dgp"], _DGP_KEYS)
        if merged["dgp"].get("family") not in FAMILIES:
            raise ConfigError(f"{where}.dgp.family must be one of {', '.join(FAMILIES)}")
        try:
            dgp = DgpSpec(**merged["dgp"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.dgp: {exc}") from None
    if merged.get("csv") is not None:
        c = merged["csv"]
        _check_keys(f"{where}.csv", c, _CSV_KEYS)
        if "path" not in c or "target" not in c:
            raise ConfigError(f"{where}.csv needs path and target")
        csv = CsvSource(c["path"], c["target"], tuple(c.get("split", (0.4, 0.4, 0.2))))
    methods = merged.get("methods", ExperimentConfig.methods)
    if isinstance(methods, str):
        methods = [methods]
    try:
        exp = ExperimentConfig(
            id=str(merged.get("id", f"exp{index}")),
            dgp=dgp,
            csv=csv,
            methods=tuple(methods),
            alpha=float(merged.get("alpha", 0.1)),
            reps=int(merged.get("reps", 100)),
            ridge_lambda=float(merged.get("ridge_lambda", 0.0)),
            truncation_rank=merged.get("truncation_rank"),
            master_seed=int(merged.get("master_seed", ExperimentConfig.master_seed)),
            tree_count=int(merged.get("tree_count", 10)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from None
    return exp.validate()


def load_config(text_or_dict) -> RunConfig:
    """Build a RunConfig from YAML text (or an already-parsed mapping).

    Top-level keys: ``experiments`` (list), ``defaults`` (mapping merged into
    every experiment), ``output``, ``workers``.
    """
    if isinstance(text_or_dict, str):
        try:
            data = yaml.safe_load(text_or_dict)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = f" (line {mark.line + 1})" if mark is not None else ""
            raise ConfigError(f"config is not valid YAML{line}: {exc}") from None
    else:
        data = text_or_dict
    _check_keys("config", data, {"experiments", "defaults", "output", "workers"})
    exps = data.get("experiments")
    if not exps:
        raise ConfigError("config: 'experiments' must be a non-empty list")
    defaults = data.get("defaults") or {}
    _check_keys("defaults", defaults, _EXPERIMENT_KEYS - {"id"})
    experiments = tuple(
        _experiment_from_dict(e, defaults, i) for i, e in enumerate(exps)
    )
    ids = [e.id for e in experiments]
    if len(set(ids)) != len(ids):
        raise ConfigError("config: experiment ids must be unique")
    return RunConfig(
        experiments=experiments,
        output_path=data.get("output"),
        worker_count=int(data.get("workers", 1)),
    )


def load_config_file(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return load_config(text)
