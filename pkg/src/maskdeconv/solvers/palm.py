r"""Proximal alternating linearized minimization for

.. math:: \min_{h,x}\; F(h, x) + λ\|x\|_1, \qquad
          F(h, x) = \frac{1}{2L}\sum_l \|h ⊛ (d_l ⊙ x) - y_l\|_2^2,

plus the unregularized alternating least-squares baseline.

The ``h``-step is one gradient step with step ``1/L_k``. The Hessian of
``F`` in ``h`` is circulant with eigenvalues ``(1/L) Σ_l |fft(d_l ⊙ x_k)|²``,
so ``L_k`` is their maximum and needs no iterative estimate. The ``x``-step
runs monotone FISTA on the LASSO subproblem, warm-started from ``x_k``.
"""

import time

import numpy as np

from ..errors import ArgumentError
from ..rng import STREAM_SOLVER, make_rng
from .report import PalmConfig, SolverReport, config_dict
from .sparse import LassoOperator, _split_obs, lasso_core, split_init_report


def composite_objective(h, x, masks, obs, lam):
    """``F(h, x) + λ‖x‖₁`` evaluated from residuals."""
    f, _ = LassoOperator(h, masks, obs).smooth(x)
    return f + lam * float(np.sum(np.abs(x)))


def _spectra(x, masks):
    ax = tuple(range(1, masks.ndim))
    return np.fft.fftn(masks * x, axes=ax), ax


def _h_step(h, x, masks, obs):
    """One linearized step on ``h``; returns ``(h_next, L_k)``."""
    U, ax = _spectra(x, masks)
    Lk = float(np.max(np.mean(np.abs(U) ** 2, axis=0)))
    Yf = np.fft.fftn(obs, axes=ax)
    grad_hat = np.mean(np.conj(U) * (U * np.fft.fftn(h)[None] - Yf), axis=0)
    grad = np.fft.ifftn(grad_hat)
    step = 1.0 / Lk if Lk > 0 else 1.0
    return h - step * grad, Lk


def _initial_point(meas, ms, cfg):
    shape = ms.shape
    extras = {}
    if cfg.init_mode == "constructed":
        rep = split_init_report(meas, ms, cfg.lam, cfg.inner)
        extras["j0"] = rep.extras["j0"]
        return rep.h, rep.x, extras
    if cfg.init_mode == "randomized":
        rng = make_rng(cfg.seed, STREAM_SOLVER)
        if cfg.complex_init:
            draw = lambda: (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        else:
            draw = lambda: rng.standard_normal(shape) + 0j
        return draw(), draw(), extras
    h = np.zeros(shape, complex)
    h.flat[0] = 1.0
    return h, np.zeros(shape, complex), extras


def palm(meas, ms, cfg, h_init=None, x_init=None):
    """Run PALM from the initialization selected by ``cfg.init_mode``.

    Passing both `h_init` and `x_init` overrides the initializer.
    """
    if not isinstance(cfg, PalmConfig):
        raise ArgumentError("cfg must be a PalmConfig")
    t0 = time.perf_counter()
    masks, obs = _split_obs(meas, ms)
    if h_init is not None and x_init is not None:
        h = np.array(h_init, dtype=complex)
        x = np.array(x_init, dtype=complex)
        extras = {"init": "given"}
    else:
        if cfg.init_mode == "constructed" and ms.L < 2:
            raise ArgumentError("constructed initialization needs L >= 2")
        h, x, extras = _initial_point(meas, ms, cfg)
        extras["init"] = cfg.init_mode
    extras["h0"], extras["x0"] = h.copy(), x.copy()

    lam = cfg.lam
    obj = composite_objective(h, x, masks, obs, lam)
    history = [obj]
    warnings = []
    inner_total = 0
    converged = obj == 0.0
    k = 0
    while not converged and k < cfg.max_iters:
        k += 1
        h, Lk = _h_step(h, x, masks, obs)
        if Lk <= 0:
            warnings.append(f"iteration {k}: L_k = 0, used step 1.0")
        op = LassoOperator(h, masks, obs)
        x, inner_hist, inner_k, _, _ = lasso_core(op, lam, x, cfg.inner.max_iters, cfg.inner.tol)
        inner_total += inner_k
        new = inner_hist[-1]
        history.append(new)
        if abs(obj - new) <= cfg.tol * obj or new == 0.0:
            converged = True
        obj = new

    extras["inner_iterations"] = inner_total
    return SolverReport(
        h=h, x=x, objective_history=history, iterations=k, converged=converged,
        wall_time=time.perf_counter() - t0, warnings=warnings,
        config=config_dict(cfg), extras=extras,
    )


def least_squares_baseline(meas, ms, max_iters=200, tol=1e-10, inner_iters=500, inner_tol=1e-8):
    """Alternating exact minimization of ``F`` (no sparsity penalty).

    Starts from ``h = e₁``; the ``x``-step is a least-squares solve by the
    same first-order inner loop and the ``h``-step is the closed-form
    Fourier-domain minimizer.
    """
    t0 = time.perf_counter()
    masks, obs = _split_obs(meas, ms)
    shape = ms.shape
    h = np.zeros(shape, complex)
    h.flat[0] = 1.0
    x = np.zeros(shape, complex)
    history = [composite_objective(h, x, masks, obs, 0.0)]
    ax = tuple(range(1, masks.ndim))
    Yf = np.fft.fftn(obs, axes=ax)
    converged = False
    k = 0
    while not converged and k < max_iters:
        k += 1
        op = LassoOperator(h, masks, obs)
        x, _, _, _, _ = lasso_core(op, 0.0, x, inner_iters, inner_tol)
        U, _ = _spectra(x, masks)
        den = np.sum(np.abs(U) ** 2, axis=0)
        num = np.sum(np.conj(U) * Yf, axis=0)
        h_hat = np.fft.fftn(h)
        # frequencies the current x does not excite keep their old value
        h_hat = np.where(den > 0, num / np.where(den > 0, den, 1.0), h_hat)
        h = np.fft.ifftn(h_hat)
        new = composite_objective(h, x, masks, obs, 0.0)
        history.append(new)
        if abs(history[-2] - new) <= tol * history[-2] or new == 0.0:
            converged = True
    return SolverReport(
        h=h, x=x, objective_history=history, iterations=k, converged=converged,
        wall_time=time.perf_counter() - t0, config={"solver": "ls", "max_iters": max_iters},
    )
