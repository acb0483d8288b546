"""Nuclear-norm constrained least squares in the lifted domain."""

import time

import numpy as np

from ..errors import ArgumentError, DimensionError, NumericalError, StepSizeError
from ..lifting import apply_A, apply_A_adjoint
from ..masks import singular_bounds
from .report import ClsConfig, SolverReport, config_dict


def _project_l1_nonneg(s, R):
    """Project a non-negative, descending vector onto ``{v >= 0 : Σv <= R}``."""
    if s.sum() <= R:
        return s
    cs = np.cumsum(s) - R
    k = np.arange(1, s.size + 1)
    rho = np.nonzero(s - cs / k > 0)[0][-1]
    theta = cs[rho] / (rho + 1)
    return np.maximum(s - theta, 0.0)


def project_nuclear_ball(X, R):
    """Frobenius projection of `X` onto the nuclear-norm ball of radius `R`."""
    if not np.isfinite(R) or R <= 0:
        raise ArgumentError(f"radius must be positive, got {R}")
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2:
        raise DimensionError("X must be a matrix")
    try:
        U, s, Vh = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD failed on a {X.shape} matrix (finite={np.all(np.isfinite(X))}, "
            f"fro={np.linalg.norm(X):.3e}): {exc}"
        ) from exc
    if s.sum() <= R:
        return X.copy()
    return (U * _project_l1_nonneg(s, R)) @ Vh


def rank1_extract(X):
    """Leading factors ``(h, x, σ)`` with ``outer(h, x)`` the best rank-1 fit to `X`."""
    X = np.asarray(X, dtype=complex)
    if not np.any(X):
        raise ArgumentError("cannot extract factors from the zero matrix")
    U, s, Vh = np.linalg.svd(X)
    r = np.sqrt(s[0])
    return r * U[:, 0], r * Vh[0], float(s[0])


def solve_constrained_ls(meas, ms, cfg):
    """Projected gradient for ``min ‖Ŷ - 𝒜(X)‖_F`` over ``‖X‖_* <= R``.

    With the automatic step ``L / σ_max(D_g)²`` the objective never increases;
    an increase beyond round-off raises :class:`StepSizeError`.
    """
    if not isinstance(cfg, ClsConfig):
        raise ArgumentError("cfg must be a ClsConfig")
    t0 = time.perf_counter()
    Y = meas.freq_obs
    n = ms.n
    if cfg.step == "auto":
        step = ms.L / singular_bounds(ms)[1] ** 2
    else:
        step = float(cfg.step)

    X = np.zeros((n, n), dtype=complex)
    resid = -Y
    obj = float(np.linalg.norm(resid))
    # rounding in 𝒜 and the SVD leaves residuals of order eps·‖Ŷ‖
    slack = 1e-12 * obj
    history = [obj]
    quiet = 0
    converged = obj == 0.0
    k = 0
    while not converged and k < cfg.max_iters:
        k += 1
        X = project_nuclear_ball(X - step * apply_A_adjoint(resid, ms), cfg.radius)
        resid = apply_A(X, ms) - Y
        new = float(np.linalg.norm(resid))
        if new > obj * (1 + 1e-12) + slack:
            if cfg.step == "auto":
                raise StepSizeError(f"objective rose from {obj:.6e} to {new:.6e} at iteration {k}")
        history.append(new)
        quiet = quiet + 1 if obj - new <= cfg.tol * obj else 0
        obj = new
        if quiet >= cfg.patience or obj == 0.0:
            converged = True

    return SolverReport(
        X=X,
        objective_history=history,
        iterations=k,
        converged=converged,
        wall_time=time.perf_counter() - t0,
        config=config_dict(cfg),
        extras={"step": step},
    )
