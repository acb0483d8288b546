"""Monte-Carlo trials and parameter sweeps.

Every trial draws its ground truth, masks and noise from separate streams
keyed by ``(seed, trial)`` (plus the cell's ``L`` for masks and noise), so a
trial can be re-run alone, in any order, in any process, and two solvers run
on the same config see exactly the same data.
"""

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrialError
from ..lifting import add_awgn, forward_time, MeasurementSet
from ..masks import MaskDistribution, sample_mask_set
from ..rng import STREAM_MASKS, STREAM_NOISE, STREAM_TRUTH, make_rng
from ..signal import optimal_phase, phase_dist
from ..solvers import (
    ClsConfig,
    LassoConfig,
    PalmConfig,
    least_squares_baseline,
    palm,
    rank1_extract,
    solve_constrained_ls,
    solve_lasso,
)
from .config import ExperimentConfig
from .metrics import is_success, rmse, snr_out_db

CSV_COLUMNS = ("axis_name", "axis_value", "trial", "seed", "rmse", "snr_out_db", "success", "dist_h0", "wall_time_s")


@dataclass
class TrialResult:
    trial: int
    seed: int
    rmse: float
    snr_out_db: float
    success: bool
    dist_h0: float = math.nan
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)


@dataclass
class Truth:
    h: np.ndarray
    x: np.ndarray


def stream_seed(*key):
    """A 63-bit integer seed derived from a key of non-negative integers."""
    state = np.random.SeedSequence(list(key)).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def _gaussian(rng, size, complex_field):
    if complex_field:
        return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)
    return rng.standard_normal(size) + 0j


def draw_truth(cfg, trial):
    rng = make_rng(cfg.seed, trial, STREAM_TRUTH)
    cplx = cfg.field == "complex"
    n = cfg.n
    h = np.zeros(n, complex)
    support = cfg.support
    if support is None:
        h[:] = _gaussian(rng, n, cplx)
    else:
        h[support] = _gaussian(rng, len(support), cplx)
    x = np.zeros(n, complex)
    if cfg.K == 0:
        x[:] = _gaussian(rng, n, cplx)
    else:
        idx = rng.choice(n, cfg.K, replace=False)
        x[idx] = _gaussian(rng, cfg.K, cplx)
    return Truth(h, x)


def _masks(cfg, trial, L):
    dist = MaskDistribution.from_name(cfg.mask)
    return sample_mask_set(dist, cfg.n, L, stream_seed(cfg.seed, trial, STREAM_MASKS, L))


def synthesize(cfg, trial, L, snr_db):
    """Truth, masks and (noisy) measurements for one trial of one cell."""
    truth = draw_truth(cfg, trial)
    if cfg.solver == "lasso":
        truth.x /= np.linalg.norm(truth.x)
    ms = _masks(cfg, trial, L)
    meas = forward_time(truth.h, truth.x, ms)
    noise_seed = stream_seed(cfg.seed, trial, STREAM_NOISE, L)
    if cfg.solver == "lasso" and cfg.lasso.noise_c > 0:
        rng = make_rng(noise_seed)
        z = _gaussian(rng, meas.time_obs.shape, True)
        z *= cfg.lasso.noise_c * np.linalg.norm(truth.h) * np.linalg.norm(truth.x) / np.linalg.norm(z)
        meas = MeasurementSet(meas.time_obs + z, z, ms.digest)
    elif snr_db is not None:
        meas = add_awgn(meas, snr_db, noise_seed)
    return truth, ms, meas


def oracle_kernel(h, eps, rng):
    """A unit vector at distance exactly `eps` from ``h/‖h‖``."""
    u = h / np.linalg.norm(h)
    w = rng.standard_normal(u.shape) + 1j * rng.standard_normal(u.shape)
    w -= np.vdot(u, w) * u
    w /= np.linalg.norm(w)
    c = 1 - eps**2 / 2
    return c * u + np.sqrt(max(0.0, 1 - c * c)) * w


def run_trial(cfg, trial_index, L=None, snr_db=None):
    """Run one trial of `cfg` (pinned to a cell with `L` / `snr_db` when given)."""
    if not isinstance(cfg, ExperimentConfig):
        raise TypeError("cfg must be an ExperimentConfig")
    L = cfg.L_grid[0] if L is None else L
    snr_db = cfg.snr_grid[0] if snr_db is None else snr_db
    t0 = time.perf_counter()
    truth, ms, meas = synthesize(cfg, trial_index, L, snr_db)
    return evaluate(cfg, trial_index, truth, ms, meas, snr_db=snr_db, t0=t0)


def evaluate(cfg, trial_index, truth, ms, meas, snr_db=None, t0=None):
    """Run ``cfg.solver`` on prepared data and score it against `truth`."""
    t0 = time.perf_counter() if t0 is None else t0
    L = ms.L
    details = {"L": L, "snr_db": snr_db}
    dist_h0 = math.nan
    try:
        h_est, x_est = _solve(cfg, trial_index, truth, ms, meas, details)
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        raise TrialError(
            f"trial {trial_index} (L={L}, snr_db={snr_db}, seed={cfg.seed}) failed: {exc}"
        ) from exc
    if "h0" in details:
        dist_h0 = phase_dist(details.pop("h0"), truth.h / np.linalg.norm(truth.h))
    err = rmse(h_est, x_est, truth.h, truth.x)
    details["h_est"], details["x_est"] = h_est, x_est
    return TrialResult(
        trial=trial_index,
        seed=stream_seed(cfg.seed, trial_index, STREAM_MASKS, L),
        rmse=err,
        snr_out_db=snr_out_db(err),
        success=is_success(err),
        dist_h0=dist_h0,
        wall_time=time.perf_counter() - t0,
        details=details,
    )


def _solve(cfg, trial, truth, ms, meas, details):
    solver = cfg.solver
    if solver == "truth":
        return truth.h, truth.x
    if solver == "cls":
        h_hat = np.fft.fft(truth.h)
        radius = np.linalg.norm(h_hat) * np.linalg.norm(truth.x)
        rep = solve_constrained_ls(meas, ms, ClsConfig(radius, cfg.cls.max_iters, tol=cfg.cls.tol))
        target = np.outer(h_hat, truth.x)
        details["lifted_error"] = float(np.linalg.norm(rep.X - target))
        details["noise_hat_fro"] = float(np.linalg.norm(meas.noise_hat))
        details["iterations"] = rep.iterations
        hh, xx, _ = rank1_extract(rep.X)
        return np.fft.ifft(hh), xx
    if solver == "palm":
        p = cfg.palm
        pcfg = PalmConfig(
            lam=p.lam, max_iters=p.max_iters, init_mode=p.init_mode,
            inner=LassoConfig(p.lam, p.inner_max_iters, p.inner_tol),
            seed=stream_seed(cfg.seed, trial, 4), complex_init=cfg.field == "complex",
        )
        rep = palm(meas, ms, pcfg)
        details["objective_history"] = list(rep.objective_history)
        details["iterations"] = rep.iterations
        details["warnings"] = list(rep.warnings)
        if p.init_mode == "constructed":
            details["h0"] = rep.extras["h0"]
        return rep.h, rep.x
    if solver == "ls":
        rep = least_squares_baseline(meas, ms, max_iters=cfg.palm.max_iters)
        details["objective_history"] = list(rep.objective_history)
        return rep.h, rep.x
    if solver == "lasso":
        s = cfg.lasso
        h0 = oracle_kernel(truth.h, s.eps, make_rng(cfg.seed, trial, 5))
        hn = np.linalg.norm(truth.h)
        lam = s.lam if s.lam is not None else 2 * (2 * s.eps + s.noise_c) * hn * np.linalg.norm(truth.x)
        rep = solve_lasso(meas, ms, h0, LassoConfig(lam, s.max_iters, s.tol))
        phase = optimal_phase(truth.h / hn, h0)
        details["lam"] = lam
        details["lasso_error"] = float(np.linalg.norm(rep.x - phase * hn * truth.x))
        details["h0"] = h0
        return h0 * hn, rep.x / hn
    raise ValueError(f"unknown solver {solver!r}")


@dataclass
class SweepResult:
    axis: str
    values: list
    trials: list  # trials[i] holds the TrialResults of cell i, ordered by trial index

    def cell_stats(self):
        rows = []
        for v, res in zip(self.values, self.trials):
            r = np.array([t.rmse for t in res])
            snr = np.array([t.snr_out_db for t in res])
            rows.append({
                self.axis: v,
                "trials": len(res),
                "mean_rmse": float(r.mean()),
                "median_rmse": float(np.median(r)),
                "success_rate": float(np.mean([t.success for t in res])),
                "mean_snr_out_db": float(np.mean(np.minimum(snr, 400.0))),
            })
        return rows

    def success_rates(self):
        return [row["success_rate"] for row in self.cell_stats()]

    def rows(self):
        for v, res in zip(self.values, self.trials):
            for t in res:
                yield {
                    "axis_name": self.axis, "axis_value": v, "trial": t.trial, "seed": t.seed,
                    "rmse": repr(t.rmse), "snr_out_db": repr(t.snr_out_db), "success": int(t.success),
                    "dist_h0": repr(t.dist_h0), "wall_time_s": f"{t.wall_time:.6f}",
                }

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            w.writeheader()
            w.writerows(self.rows())
        return path


def _cell_job(args):
    cfg, trial, L, snr = args
    return run_trial(cfg, trial, L=L, snr_db=snr)


def sweep(cfg, axis="L", values=None, jobs=1, csv_path=None, on_trial=None):
    """Run ``cfg.trials`` trials for every value on `axis` (``"L"`` or ``"snr_db"``)."""
    if axis not in ("L", "snr_db"):
        raise ValueError(f"axis must be 'L' or 'snr_db', got {axis!r}")
    if values is None:
        values = cfg.L_grid if axis == "L" else cfg.snr_grid
    values = list(values)
    jobs_list = []
    for v in values:
        L = v if axis == "L" else cfg.L_grid[0]
        snr = v if axis == "snr_db" else cfg.snr_grid[0]
        jobs_list += [(cfg, t, L, snr) for t in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_cell_job, jobs_list, chunksize=1))
    else:
        flat = []
        for job in jobs_list:
            flat.append(_cell_job(job))
            if on_trial is not None:
                on_trial(job, flat[-1])
    cells = [flat[i * cfg.trials:(i + 1) * cfg.trials] for i in range(len(values))]
    result = SweepResult(axis, values, cells)
    if csv_path is not None:
        result.to_csv(csv_path)
    return result
