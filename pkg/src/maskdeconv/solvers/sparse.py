r"""Sparse-regime solvers: the spectral initializer for ``h``, LASSO for ``x``
and the sample-split initialization that combines them.

The LASSO operator for a fixed kernel ``h`` is
``𝒜_l(z) = h ⊛ (d_l ⊙ z)``, and the problem solved is

.. math:: \min_x \frac{1}{2L}\sum_l \|𝒜_l(x) - y_l\|_2^2 + λ\|x\|_1 .

Signals may be 1-D or 2-D; everything is applied with FFTs over the signal axes.
"""

import time

import numpy as np

from ..errors import ArgumentError, DegenerateInputError, DimensionError, NormalizationError
from ..rng import make_rng
from .report import LassoConfig, SolverReport, config_dict

try:
    from . import _kernels
except ImportError:  # pragma: no cover - numba missing
    _kernels = None

# dense Gram matrices (and exact curvature) are used up to this length
DENSE_GRAM_MAX_N = 256
# the dense spectral matrix H is only formed up to this length
DENSE_H_MAX_N = 4096
POWER_ITERS = 20
POWER_INFLATION = 1.05
TIE_RTOL = 1e-12
_TINY = np.finfo(float).tiny


def soft_threshold(z, tau):
    """Complex soft-threshold ``z · max(1 - τ/|z|, 0)``, with 0 at ``z = 0``."""
    # dividing by max(|z|, τ) clamps the scale at 0 and avoids 0/0 when τ = 0
    return z * (1.0 - tau / np.maximum(np.abs(z), max(tau, _TINY)))


def _axes(a):
    return tuple(range(1, a.ndim))


class LassoOperator:
    """``x ↦ {h ⊛ (d_l ⊙ x)}_l`` for a fixed kernel and a stack of masks."""

    def __init__(self, h, masks, obs):
        self.masks = np.asarray(masks, dtype=complex)
        self.obs = np.asarray(obs, dtype=complex)
        self.h = np.asarray(h, dtype=complex)
        if self.masks.shape != self.obs.shape or self.masks.shape[1:] != self.h.shape:
            raise DimensionError("kernel, masks and observations disagree in shape")
        self.L = self.masks.shape[0]
        self.ax = _axes(self.masks)
        self.h_hat = np.fft.fftn(self.h)
        self.dense = None
        n = self.h.size
        if self.h.ndim == 1 and n <= DENSE_GRAM_MAX_N:
            # stack the L blocks C_h diag(d_l) into one (L n) x n matrix
            j = np.arange(n)
            Ch = self.h[(j[:, None] - j[None, :]) % n]
            self.dense = (Ch[None] * self.masks[:, None, :]).reshape(self.L * n, n)
            self._dense_h = self.dense.conj().T
            self._y = self.obs.ravel()
        else:
            self._y_hat = np.fft.fftn(self.obs, axes=self.ax)

    # Matrix-free evaluations keep residuals in the Fourier domain:
    # r̂_l = ĥ ⊙ fft(d_l ⊙ x) - ŷ_l, and ‖r‖² = ‖r̂‖²/n by Parseval.

    def residual(self, x):
        if self.dense is not None:
            return (self.dense @ x - self._y).reshape(self.obs.shape)
        return np.fft.ifftn(self.residual_hat(x), axes=self.ax)

    def residual_hat(self, x):
        return self.h_hat * np.fft.fftn(self.masks * x, axes=self.ax) - self._y_hat

    def value_hat(self, r_hat):
        return 0.5 * np.vdot(r_hat, r_hat).real / (self.L * self.h.size)

    def grad_hat(self, r_hat):
        back = np.fft.ifftn(np.conj(self.h_hat) * r_hat, axes=self.ax)
        return np.mean(np.conj(self.masks) * back, axis=0)

    def _adjoint(self, r):
        if self.dense is not None:
            return self._dense_h @ r.ravel() / self.L
        return self.grad_hat(np.fft.fftn(r, axes=self.ax))

    def smooth(self, x):
        """``(f(x), ∇f(x))`` for the quadratic part."""
        if self.dense is None:
            r_hat = self.residual_hat(x)
            return self.value_hat(r_hat), self.grad_hat(r_hat)
        r = self.residual(x)
        return 0.5 * np.vdot(r, r).real / self.L, self._adjoint(r)

    def normal(self, z):
        """``(1/L) Σ 𝒜_l^* 𝒜_l z``."""
        if self.dense is None:
            return self.grad_hat(self.h_hat * np.fft.fftn(self.masks * z, axes=self.ax))
        return self._adjoint(self.residual(z) + self.obs)

    def rhs(self):
        """``(1/L) Σ 𝒜_l^* y_l``."""
        return self._adjoint(self.obs)

    def curvature(self, seed=0):
        """Largest eigenvalue of :meth:`normal` (exact for short 1-D signals)."""
        if self.dense is not None:
            return float(np.linalg.eigvalsh(self._dense_h @ self.dense)[-1]) / self.L
        rng = make_rng(seed)
        v = rng.standard_normal(self.h.shape) + 1j * rng.standard_normal(self.h.shape)
        est = 0.0
        for _ in range(POWER_ITERS):
            v = v / np.linalg.norm(v)
            w = self.normal(v)
            est = float(np.vdot(v, w).real)
            v = w
            if not np.any(v):
                return 0.0
        return POWER_INFLATION * est


def lasso_core(op, lam, x0, max_iters, tol):
    """Monotone FISTA on the LASSO defined by `op`.

    Stops once the proximal fixed-point residual
    ``‖x - soft(x - s∇f(x), sλ)‖`` drops to `tol`. Returns
    ``(x, objective_history, iterations, converged, step)``.
    """
    lip = op.curvature()
    x0 = np.array(x0, dtype=complex)
    if lip <= 0:
        # the operator is zero: the objective is constant in x and 0 minimizes the penalty
        x = np.zeros_like(x0)
        f, _ = op.smooth(x)
        return x, [f], 0, True, np.inf
    if op.dense is not None:
        return _mfista_gram(op, lam, x0, lip, max_iters, tol)
    return _mfista_operator(op, lam, x0, lip, max_iters, tol)


def _mfista_gram(op, lam, x, lip, max_iters, tol):
    if _kernels is None:
        return _mfista_gram_py(op, lam, x, lip, max_iters, tol)
    M = op._dense_h @ op.dense / op.L
    f0, _ = op.smooth(x)
    obj0 = f0 + lam * float(np.sum(np.abs(x)))
    xk, hist, k, conv = _kernels.mfista_gram(
        np.ascontiguousarray(M), op.rhs(), float(lam), x, 1.0 / lip, int(max_iters), float(tol), obj0
    )
    return xk, hist.tolist(), int(k), bool(conv), 1.0 / lip


def _mfista_gram_py(op, lam, x, lip, max_iters, tol):
    # Works with M = (1/L) AᴴA and b = (1/L) Aᴴy. Objective changes are taken as
    # Re<u - x, M(u + x)/2 - b>, which stays accurate when f itself is tiny,
    # and M z is carried along by linearity so each step costs one product.
    M = op._dense_h @ op.dense / op.L
    b = op.rhs()
    s = 1.0 / lip
    f0, _ = op.smooth(x)
    Mx = M @ x
    gx = Mx - b
    l1x = np.sum(np.abs(x))
    obj = f0 + lam * l1x
    history = [obj]
    z, Mz, gz, t = x, Mx, gx, 1.0
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        u = soft_threshold(z - s * gz, s * lam)
        Mu = M @ u
        l1u = np.sum(np.abs(u))
        delta = np.vdot(u - x, 0.5 * (Mu + Mx) - b).real + lam * (l1u - l1x)
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        a, c = t / t_next, (t - 1) / t_next
        if delta <= 0:
            x_prev, Mx_prev = x, Mx
            x, Mx, l1x = u, Mu, l1u
            gx = Mu - b
            obj += delta
        else:
            x_prev, Mx_prev = x, Mx
        z = x + a * (u - x) + c * (x - x_prev)
        Mz = Mx + a * (Mu - Mx) + c * (Mx - Mx_prev)
        gz = Mz - b
        t = t_next
        history.append(obj)
        if np.linalg.norm(x - soft_threshold(x - s * gx, s * lam)) <= tol:
            converged = True
            break
    return x, history, k, converged, s


def _mfista_operator(op, lam, x, lip, max_iters, tol):
    # Matrix-free variant. Residuals and gradients are affine in the iterate,
    # so those of the extrapolated point are combined from stored ones and
    # each step costs a single operator evaluation. The curvature is only an
    # estimate, so every step is checked against the quadratic upper bound.
    def l1(v):
        return lam * np.sum(np.abs(v))

    rx = op.residual_hat(x)
    fx, gx = op.value_hat(rx), op.grad_hat(rx)
    # the carried residuals drift by rounding relative to the data, not to f,
    # so the bound check needs a floor tied to the size of the observations
    floor = 1e-12 * op.value_hat(op._y_hat)
    obj = fx + l1(x)
    history = [obj]
    x_prev, rx_prev, gx_prev = x, rx, gx
    z, rz, gz, fz = x, rx, gx, fx
    t = 1.0
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        while True:
            step = 1.0 / lip
            u = soft_threshold(z - step * gz, step * lam)
            ru = op.residual_hat(u)
            fu = op.value_hat(ru)
            d = u - z
            if not np.any(d):
                break
            bound = fz + np.vdot(gz, d).real + 0.5 * lip * np.vdot(d, d).real
            if fu <= bound + 1e-10 * abs(fz) + floor:
                break
            lip *= 2.0
        gu = op.grad_hat(ru)
        t_next = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        a, c = t / t_next, (t - 1) / t_next
        obj_u = fu + l1(u)
        x_prev, rx_prev, gx_prev = x, rx, gx
        if obj_u <= obj:
            x, rx, gx, fx, obj = u, ru, gu, fu, obj_u
        z = x + a * (u - x) + c * (x - x_prev)
        rz = rx + a * (ru - rx) + c * (rx - rx_prev)
        gz = gx + a * (gu - gx) + c * (gx - gx_prev)
        fz = op.value_hat(rz)
        t = t_next
        history.append(obj)
        if np.linalg.norm(x - soft_threshold(x - step * gx, step * lam)) <= tol:
            converged = True
            break
    return x, history, k, converged, 1.0 / lip


def _split_obs(meas, ms):
    masks = ms.values
    obs = meas.time_obs
    if masks.shape != obs.shape:
        raise DimensionError(f"masks {masks.shape} and observations {obs.shape} disagree")
    return masks, obs


def solve_lasso(meas, ms, h0, cfg, x_init=None):
    """LASSO estimate of ``x`` given a unit-norm kernel estimate `h0`."""
    if not isinstance(cfg, LassoConfig):
        raise ArgumentError("cfg must be a LassoConfig")
    masks, obs = _split_obs(meas, ms)
    h0 = np.asarray(h0, dtype=complex)
    if abs(np.linalg.norm(h0) - 1) > 1e-10:
        raise NormalizationError(f"h0 must have unit norm, got {np.linalg.norm(h0):.6g}")
    t0 = time.perf_counter()
    op = LassoOperator(h0, masks, obs)
    x0 = np.zeros(h0.shape, complex) if x_init is None else np.asarray(x_init, dtype=complex)
    x, hist, k, conv, step = lasso_core(op, cfg.lam, x0, cfg.max_iters, cfg.tol)
    return SolverReport(
        h=h0, x=x, objective_history=hist, iterations=k, converged=conv,
        wall_time=time.perf_counter() - t0, config=config_dict(cfg), extras={"step": step},
    )


def _row_norms(masks, obs):
    # ‖row_j‖² = c_jᴴ G c_j / L² with G the Gram of the observations and
    # c_j = conj(d_{·,j}); cyclic shifts do not change inner products
    L = masks.shape[0]
    Yf = obs.reshape(L, -1)
    G = np.conj(Yf) @ Yf.T
    C = np.conj(masks.reshape(L, -1))
    return np.maximum(np.sum(np.conj(C) * (G @ C), axis=0).real, 0.0) / L**2


def _row(masks, obs, j):
    shape = obs.shape[1:]
    idx = np.unravel_index(j, shape)
    rolled = np.roll(obs, tuple(-i for i in idx), axis=_axes(obs))
    return np.mean(np.conj(masks.reshape(masks.shape[0], -1)[:, j]).reshape((-1,) + (1,) * len(shape)) * rolled, axis=0)


def spectral_matrix(masks, obs):
    """Dense ``H = (1/L) Σ_l conj(D_l) Č_{y_l}`` for 1-D data; row j is ``mean_l conj(d_lj) y_l(· + j)``."""
    L, n = masks.shape
    j = np.arange(n)
    idx = (j[:, None] + j[None, :]) % n
    return np.einsum("lj,ljk->jk", np.conj(masks), obs[:, idx]) / L


def _select_row(masks, obs):
    norms = _row_norms(masks, obs)
    top = norms.max()
    if top <= 0:
        raise DegenerateInputError("every row of the spectral matrix is zero")
    j = int(np.flatnonzero(norms >= top * (1 - TIE_RTOL))[0])
    row = _row(masks, obs, j)
    return j, row / np.linalg.norm(row)


def spectral_init_h(meas, ms, return_matrix=True):
    """Spectral estimate of the kernel direction.

    Returns ``(H, j, h0)``: `H` the spectral matrix (``None`` for 2-D data,
    for long signals, or when `return_matrix` is false), `j` the flat index of
    its largest row (smallest index on ties) and `h0` that row normalized.
    """
    masks, obs = _split_obs(meas, ms)
    j, h0 = _select_row(masks, obs)
    H = None
    if return_matrix and masks.ndim == 2 and masks.shape[1] <= DENSE_H_MAX_N:
        H = spectral_matrix(masks, obs)
    return H, j, h0


def split_init(meas, ms, lam, lasso_cfg=None):
    """Kernel from the first ``⌊L/2⌋`` observations, then LASSO on the rest.

    Returns ``(h0, x0)``; the row index used is available via
    :func:`split_init_report`.
    """
    rep = split_init_report(meas, ms, lam, lasso_cfg)
    return rep.h, rep.x


def split_init_report(meas, ms, lam, lasso_cfg=None):
    masks, obs = _split_obs(meas, ms)
    L = masks.shape[0]
    if L < 2:
        raise ArgumentError(f"sample splitting needs L >= 2, got {L}")
    cfg = lasso_cfg or LassoConfig(lam)
    half = L // 2
    j0, h0 = _select_row(masks[:half], obs[:half])
    op = LassoOperator(h0, masks[half:], obs[half:])
    x, hist, k, conv, step = lasso_core(op, cfg.lam, np.zeros(h0.shape, complex), cfg.max_iters, cfg.tol)
    return SolverReport(
        h=h0, x=x, objective_history=hist, iterations=k, converged=conv,
        config=config_dict(cfg), extras={"j0": j0, "split": half, "step": step},
    )
