"""Recovery algorithms."""

from .lifted import project_nuclear_ball, rank1_extract, solve_constrained_ls
from .palm import composite_objective, least_squares_baseline, palm
from .report import ClsConfig, LassoConfig, PalmConfig, SolverReport
from .sparse import (
    LassoOperator,
    soft_threshold,
    solve_lasso,
    spectral_init_h,
    spectral_matrix,
    split_init,
    split_init_report,
)

__all__ = [
    "ClsConfig",
    "LassoConfig",
    "LassoOperator",
    "PalmConfig",
    "SolverReport",
    "composite_objective",
    "least_squares_baseline",
    "palm",
    "project_nuclear_ball",
    "rank1_extract",
    "soft_threshold",
    "solve_constrained_ls",
    "solve_lasso",
    "spectral_init_h",
    "spectral_matrix",
    "split_init",
    "split_init_report",
]
