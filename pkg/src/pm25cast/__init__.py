"""Nonlinear-regression engine and PM2.5 forecasting pipeline."""

from .bootstrap import (
    BootstrapSummary,
    apply_correction,
    run_simulation,
    stratified_sample,
)
from .data import (
    AggregatedDay,
    DailyRecord,
    ModelFrame,
    NcepSixHourly,
    aggregate_ncep,
    build_frame,
    parse_ncep,
    parse_observations,
)
from .diagnostics import (
    BiasReport,
    CurvatureReport,
    ResidualDiagnostics,
    bates_curvature,
    box_bias,
    residual_screen,
)
from .errors import (
    AggregationError,
    DataError,
    Pm25CastError,
    RankDeficiencyError,
    StratificationError,
)
from .forecast import (
    FrozenModel,
    IntervalForecast,
    IntervalProfile,
    PROFILES,
    PRESETS,
    Predictors,
    hazard_flags,
    inclusion_rate,
    interval,
    predict_id_algo1,
    predict_id_algo2,
    predict_pm,
)
from .model import ModelSpec, eval_f, hessian_cube, jacobian, structural_rss
from .numerics import (
    f_quantile,
    ks_normal,
    ks_two_sample,
    pearson_test,
    qr_full,
    spearman_test,
)
from .solver import FitResult, TraceStep, gauss_newton, standardize_residuals

__version__ = "0.1.0"

__all__ = [
    "AggregatedDay",
    "AggregationError",
    "BiasReport",
    "BootstrapSummary",
    "CurvatureReport",
    "DailyRecord",
    "DataError",
    "FitResult",
    "TraceStep",
    "FrozenModel",
    "IntervalForecast",
    "IntervalProfile",
    "ModelFrame",
    "ModelSpec",
    "NcepSixHourly",
    "PRESETS",
    "PROFILES",
    "Pm25CastError",
    "Predictors",
    "RankDeficiencyError",
    "ResidualDiagnostics",
    "StratificationError",
    "aggregate_ncep",
    "apply_correction",
    "bates_curvature",
    "box_bias",
    "build_frame",
    "eval_f",
    "f_quantile",
    "gauss_newton",
    "hazard_flags",
    "hessian_cube",
    "inclusion_rate",
    "interval",
    "jacobian",
    "ks_normal",
    "ks_two_sample",
    "parse_ncep",
    "parse_observations",
    "pearson_test",
    "predict_id_algo1",
    "predict_id_algo2",
    "predict_pm",
    "qr_full",
    "residual_screen",
    "run_simulation",
    "spearman_test",
    "standardize_residuals",
    "stratified_sample",
    "structural_rss",
]
