"""Metrics, Monte-Carlo trials, sweeps and the two special studies."""

from .config import ClsSettings, ExperimentConfig, ImagingSettings, LassoSettings, PalmSettings
from .imaging import embed, experiment_2d, gaussian_filter, point_sources, read_pgm, synthetic_image, write_pgm
from .lower_bound import lower_bound_instance, verify_lower_bound
from .metrics import SUCCESS_RMSE, is_success, rmse, snr_out_db
from .trials import SweepResult, TrialResult, draw_truth, evaluate, run_trial, sweep, synthesize

__all__ = [
    "ClsSettings",
    "ExperimentConfig",
    "ImagingSettings",
    "LassoSettings",
    "PalmSettings",
    "SUCCESS_RMSE",
    "SweepResult",
    "TrialResult",
    "draw_truth",
    "embed",
    "evaluate",
    "experiment_2d",
    "gaussian_filter",
    "is_success",
    "lower_bound_instance",
    "point_sources",
    "read_pgm",
    "rmse",
    "run_trial",
    "snr_out_db",
    "sweep",
    "synthesize",
    "synthetic_image",
    "verify_lower_bound",
    "write_pgm",
]
