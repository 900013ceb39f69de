"""Leverage-weighted split conformal prediction."""

from .conformal import (
    CONSTANT,
    INVERSE_ROOT,
    CalibrationResult,
    PredictionInterval,
    WeightSpec,
    build_interval,
    calibrate,
    conformal_index,
    covers,
    eval_weight,
    power_law,
    select_weight,
    shifted_power,
    variance_stabilized,
)
from .leverage import (
    LeverageDiagnostics,
    LeverageModel,
    StandardizedDesign,
    apply_standardizer,
    diagnostics,
    feature_leverage,
    fit_leverage,
    fit_standardizer,
    leverage_of,
)

__version__ = "0.1.0"
