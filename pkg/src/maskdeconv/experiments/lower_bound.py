"""Worst-case noise study for the constrained least-squares estimator.

For a unit-norm pair ``(ĥ, x)`` we build a direction ``X₀`` whose image under
𝒜 is small while it stays inside the descent cone of the nuclear norm, feed
``Ẑ = 𝒜(t'X₀)`` as noise, and compare the resulting estimation error with
``√n‖Ẑ‖_F/√L``.
"""

import math

import numpy as np

from ..errors import DegenerateInputError
from ..lifting import adversarial_direction, adversarial_noise, apply_A, nuclear_norm
from ..masks import MaskDistribution, sample_mask_set
from ..rng import STREAM_MASKS, STREAM_TRUTH, make_rng
from ..signal import TangentProjector, coherence_mu
from ..solvers import ClsConfig, solve_constrained_ls
from .trials import stream_seed


def _unit(v):
    return v / np.linalg.norm(v)


def lower_bound_instance(cfg, trial, L=None, t=0.1, run_cls=False):
    """One adversarial instance; returns a flat dict of checks and ratios."""
    L = cfg.L_grid[0] if L is None else L
    n = cfg.n
    rng = make_rng(cfg.seed, trial, STREAM_TRUTH)
    h_hat = _unit(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    x = _unit(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    ms = sample_mask_set(MaskDistribution.from_name(cfg.mask), n, L, stream_seed(cfg.seed, trial, STREAM_MASKS, L))
    out = {"trial": trial, "n": n, "L": L, "skipped": False}
    try:
        X0, W, beta, x_perp = adversarial_direction(h_hat, x, ms)
    except DegenerateInputError as exc:
        out.update(skipped=True, reason=str(exc))
        return out
    adv = adversarial_noise(h_hat, x, ms, t)
    base = np.outer(h_hat, x)
    R = nuclear_norm(base)
    proj = TangentProjector(h_hat, x)
    nu = ms.distribution.nu
    AX0 = np.linalg.norm(apply_A(X0, ms))
    tp = float(np.linalg.norm(adv.x_tilde) / np.linalg.norm(X0))
    X_sharp = base + adv.x_tilde
    Y = apply_A(base, ms) + adv.z_hat
    z_fro = float(np.linalg.norm(adv.z_hat))
    h_time = np.fft.ifft(h_hat)
    mu = coherence_mu(h_time)
    out.update(
        beta=beta,
        t_prime=tp,
        A_W_rel=float(np.linalg.norm(apply_A(W, ms)) / np.linalg.norm(W)),
        cond1_lhs=float(-np.vdot(base, X0).real),
        cond1_rhs=nuclear_norm(proj.complement(X0)),
        cond2_ratio=float(math.sqrt(n) * AX0 / (8 * math.sqrt(2) * nu * math.sqrt(L * math.log(n)) * np.linalg.norm(X0))),
        radius=R,
        certified_nuclear=nuclear_norm(X_sharp),
        certified_residual=float(np.linalg.norm(apply_A(X_sharp, ms) - Y)),
        noise_hat_fro=z_fro,
        mu=mu,
        floor=1.0 / (50 * math.sqrt(mu) * math.log(n) ** 3),
    )
    if z_fro > 0:
        out["ratio"] = float(np.linalg.norm(adv.x_tilde) * math.sqrt(L) / (math.sqrt(n) * z_fro))
    else:
        out["ratio"] = math.nan
    out["above_floor"] = bool(out["ratio"] > out["floor"])
    if run_cls:
        from ..lifting import MeasurementSet

        # solve the constrained problem on the adversarial data; the observations
        # are specified in the frequency domain, so map them back to time
        y_time = np.fft.ifft(Y.T * math.sqrt(L), axis=1)
        meas = MeasurementSet(y_time, mask_digest=ms.digest)
        rep = solve_constrained_ls(meas, ms, ClsConfig(R, cfg.cls.max_iters, tol=cfg.cls.tol))
        err = float(np.linalg.norm(rep.X - base))
        out["cls_error"] = err
        out["cls_ratio"] = err * math.sqrt(L) / (math.sqrt(n) * z_fro) if z_fro > 0 else math.nan
        out["cls_residual"] = rep.objective_history[-1]
    return out


def verify_lower_bound(cfg, t=0.1, run_cls=True):
    """Run ``cfg.trials`` adversarial instances and summarize the checks."""
    rows = [lower_bound_instance(cfg, k, t=t, run_cls=run_cls) for k in range(cfg.trials)]
    done = [r for r in rows if not r["skipped"]]
    summary = {
        "instances": len(rows),
        "skipped": len(rows) - len(done),
        "cond1_all": all(r["cond1_lhs"] >= r["cond1_rhs"] for r in done),
        "cond2_all": all(r["cond2_ratio"] <= 1 for r in done),
        "null_all": all(r["A_W_rel"] <= 1e-9 for r in done),
        "feasible_all": all(r["certified_nuclear"] <= r["radius"] + 1e-8 for r in done),
        "above_floor_all": all(r["above_floor"] for r in done),
        "min_ratio": min((r["ratio"] for r in done), default=math.nan),
    }
    return {"summary": summary, "instances": rows}
