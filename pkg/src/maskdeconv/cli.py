"""Command-line entry point.

Every subcommand reads an optional JSON config, applies dotted ``key=value``
overrides, validates the result and only then computes. Artifacts go under
the output directory; progress lines go to standard output.

Exit status: 0 on success, 2 for an invalid config or arguments, 3 when a
solver fails (a failure report is written and its path printed).
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import TrialError, ValidationError
from .experiments import (
    ExperimentConfig,
    embed,
    evaluate,
    experiment_2d,
    gaussian_filter,
    point_sources,
    read_pgm,
    run_trial,
    sweep,
    synthesize,
    verify_lower_bound,
    write_pgm,
)
from .experiments.trials import Truth, _masks
from .lifting import load_measurements, save_measurements
from .masks import load_mask_set, save_mask_set, singular_bounds
from .selftest import run_selftest

OUTPUT_ENV = "MASKDECONV_OUTPUT_DIR"
DEFAULT_OUTPUT = "maskdeconv-out"

EXIT_OK, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3


# --------------------------------------------------------------------------- config


def parse_override(text):
    """``"palm.lam=1e-6"`` -> ``(["palm", "lam"], 1e-6)``; values are JSON when they parse."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise ValidationError(f"override {text!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def apply_overrides(tree, overrides):
    tree = json.loads(json.dumps(tree))
    for text in overrides:
        path, value = parse_override(text)
        node = tree
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValidationError(f"override {text!r}: {part!r} is not a section")
            node = child
        node[path[-1]] = value
    return tree


def load_config(path=None, overrides=()):
    tree = {}
    if path is not None:
        try:
            tree = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ValidationError(f"config file {path} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}") from None
    return ExperimentConfig.from_dict(apply_overrides(tree, overrides))


# --------------------------------------------------------------------------- output


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [_jsonable(v.real), _jsonable(v.imag)]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


class Run:
    """Per-invocation state: the resolved config, the output directory and the command name."""

    def __init__(self, command, cfg, out_dir):
        self.command = command
        self.cfg = cfg
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)

    def write_json(self, name, payload):
        body = {"command": self.command, "version": __version__, "config": self.cfg.to_dict(), **payload}
        path = self.out / name
        path.write_text(json.dumps(_jsonable(body), indent=2) + "\n")
        return path


def _trial_line(res):
    L = res.details.get("L")
    return (f"trial {res.trial:3d}  L={L}  rmse={res.rmse:.3e}  snr_out={res.snr_out_db:7.2f} dB  "
            f"success={int(res.success)}  {res.wall_time:.2f}s")


def _trial_record(res):
    d = {k: v for k, v in res.details.items() if k not in ("h_est", "x_est", "objective_history")}
    return {
        "trial": res.trial, "seed": res.seed, "rmse": res.rmse, "snr_out_db": res.snr_out_db,
        "success": res.success, "dist_h0": res.dist_h0, "wall_time_s": res.wall_time, "details": d,
    }


def _aggregate(results):
    errs = np.array([r.rmse for r in results])
    return {
        "trials": len(results),
        "success_rate": float(np.mean([r.success for r in results])),
        "median_rmse": float(np.median(errs)),
        "mean_snr_out_db": float(np.mean(np.minimum([r.snr_out_db for r in results], 400.0))),
    }


# --------------------------------------------------------------------------- subcommands


def cmd_gen_masks(run, args):
    cfg = run.cfg
    L = cfg.L_grid[0]
    ms = _masks(cfg, args.trial, L)
    path = save_mask_set(ms, run.out / "masks.bin")
    smin, smax = singular_bounds(ms) if ms.n >= L else (math.nan, math.nan)
    run.write_json("gen-masks.json", {"trial": args.trial, "files": [str(path)], "digest": ms.digest,
                                      "sigma_min": smin, "sigma_max": smax})
    print(f"masks: {cfg.mask} n={ms.n} L={L} digest={ms.digest[:12]} -> {path}")
    return EXIT_OK


def cmd_simulate(run, args):
    cfg = run.cfg
    L, snr = cfg.L_grid[0], cfg.snr_grid[0]
    truth, ms, meas = synthesize(cfg, args.trial, L, snr)
    files = [
        save_mask_set(ms, run.out / "masks.bin"),
        save_measurements(meas, run.out / "measurements.bin"),
    ]
    truth_path = run.out / "truth.npz"
    np.savez(truth_path, h=truth.h, x=truth.x, trial=args.trial, snr_db=np.nan if snr is None else snr)
    files.append(truth_path)
    run.write_json("simulate.json", {"trial": args.trial, "L": L, "snr_db": snr, "files": [str(f) for f in files]})
    print(f"simulated trial {args.trial}: n={cfg.n} L={L} snr_db={snr} -> {run.out}")
    return EXIT_OK


def _load_data(data_dir):
    data_dir = Path(data_dir)
    for name in ("masks.bin", "measurements.bin", "truth.npz"):
        if not (data_dir / name).exists():
            raise ValidationError(f"{data_dir / name} not found; run `simulate` first")
    ms = load_mask_set(data_dir / "masks.bin")
    meas = load_measurements(data_dir / "measurements.bin")
    if meas.mask_digest and meas.mask_digest != ms.digest:
        raise ValidationError("measurements were not taken with the stored masks")
    with np.load(data_dir / "truth.npz") as z:
        truth = Truth(z["h"].copy(), z["x"].copy())
        trial = int(z["trial"])
        snr = float(z["snr_db"])
    return truth, ms, meas, trial, None if math.isnan(snr) else snr


def _solve_command(solver):
    def cmd(run, args):
        cfg = replace(run.cfg, solver=solver)
        run.cfg = cfg
        if args.data is not None:
            truth, ms, meas, trial, snr = _load_data(args.data)
            results = [evaluate(cfg, trial, truth, ms, meas, snr_db=snr)]
            print(_trial_line(results[0]))
        else:
            results = []
            for L in cfg.L_grid:
                for t in range(cfg.trials):
                    results.append(run_trial(cfg, t, L=L))
                    print(_trial_line(results[-1]))
        est = {}
        for r in results:
            est[f"h_{r.trial}_L{r.details['L']}"] = r.details["h_est"]
            est[f"x_{r.trial}_L{r.details['L']}"] = r.details["x_est"]
        np.savez(run.out / f"{run.command}-estimates.npz", **est)
        summary = _aggregate(results)
        path = run.write_json(f"{run.command}.json", {"summary": summary, "trials": [_trial_record(r) for r in results]})
        print(f"{run.command}: {summary['trials']} trial(s), success rate {summary['success_rate']:.2f}, "
              f"median rmse {summary['median_rmse']:.3e} -> {path}")
        return EXIT_OK
    return cmd


def cmd_sweep(run, args):
    cfg = run.cfg
    values = cfg.L_grid if args.axis == "L" else cfg.snr_grid

    def report(job, res):
        print(_trial_line(res))

    t0 = time.perf_counter()
    result = sweep(cfg, args.axis, values, jobs=args.jobs, on_trial=report if args.jobs == 1 else None)
    if args.jobs > 1:
        for cell in result.trials:
            for res in cell:
                print(_trial_line(res))
    csv_path = result.to_csv(run.out / "sweep.csv")
    stats = result.cell_stats()
    path = run.write_json("sweep.json", {"axis": args.axis, "cells": stats, "csv": str(csv_path),
                                         "wall_time_s": time.perf_counter() - t0})
    for row in stats:
        print(f"{args.axis}={row[args.axis]}: success rate {row['success_rate']:.2f}, "
              f"mean snr_out {row['mean_snr_out_db']:.2f} dB")
    print(f"sweep: {len(values)} cells x {cfg.trials} trials -> {csv_path}, {path}")
    return EXIT_OK


def cmd_verify_lower_bound(run, args):
    out = verify_lower_bound(run.cfg, t=args.t, run_cls=not args.no_cls)
    for row in out["instances"]:
        if row["skipped"]:
            print(f"instance {row['trial']:3d}  skipped: {row['reason']}")
        else:
            print(f"instance {row['trial']:3d}  ratio={row['ratio']:.3e}  floor={row['floor']:.3e}  "
                  f"cond2={row['cond2_ratio']:.3f}")
    path = run.write_json("verify-lower-bound.json", {"t": args.t, **out})
    s = out["summary"]
    print(f"verify-lower-bound: {s['instances']} instances, cond1 {s['cond1_all']}, cond2 {s['cond2_all']}, "
          f"null-space {s['null_all']}, feasible {s['feasible_all']}, min ratio {s['min_ratio']:.3e} -> {path}")
    return EXIT_OK


def cmd_image2d(run, args):
    im = run.cfg.imaging
    shape = (im.size, im.size)
    image = point_sources(shape, im.sources, seed=run.cfg.seed + 1) if im.image is None else read_pgm(im.image)
    filt = gaussian_filter(im.filter_size, im.sigma)
    solvers = ["palm", "ls"] if args.solver == "both" else [args.solver]
    vmin, vmax = write_pgm(run.out / "original.pgm", image)
    write_pgm(run.out / "filter.pgm", embed(filt, image.shape))
    reports = {}
    for solver in solvers:
        report, recovered = experiment_2d(
            image, filt, im.L, snr_db=im.snr_db, solver=solver, seed=run.cfg.seed, mask=run.cfg.mask,
            lam=im.lam, max_iters=im.max_iters, inner_max_iters=im.inner_max_iters, inner_tol=im.inner_tol,
        )
        pgm = run.out / f"recovered-{solver}.pgm"
        report["pgm"] = str(pgm)
        report["pgm_scaling"] = dict(zip(("vmin", "vmax"), write_pgm(pgm, recovered, vmin, vmax)))
        reports[solver] = report
        print(f"{solver}: snr_out={report['snr_out_db']} dB after {report['iterations']} iterations "
              f"({report['wall_time_s']:.1f}s) -> {pgm}")
    path = run.write_json("image2d.json", {"original_scaling": {"vmin": vmin, "vmax": vmax}, "runs": reports})
    print(f"image2d: {image.shape[0]}x{image.shape[1]} L={im.L} -> {path}")
    return EXIT_OK


def cmd_selftest(run, args):
    rows = run_selftest(run.cfg.seed)
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'}  {name:14s} {detail}")
    passed = sum(ok for _, ok, _ in rows)
    run.write_json("selftest.json", {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in rows]})
    print(f"selftest: {passed}/{len(rows)} checks passed")
    return EXIT_OK if passed == len(rows) else 1


COMMANDS = {
    "gen-masks": (cmd_gen_masks, "sample a mask set and write it in binary form"),
    "simulate": (cmd_simulate, "draw one trial's truth, masks and measurements and write them"),
    "solve-cls": (_solve_command("cls"), "nuclear-norm constrained least squares"),
    "solve-sparse": (_solve_command("lasso"), "LASSO for x given a perturbed kernel"),
    "palm": (_solve_command("palm"), "alternating sparse recovery of h and x"),
    "sweep": (cmd_sweep, "success rates over an L or SNR grid, written as CSV"),
    "verify-lower-bound": (cmd_verify_lower_bound, "adversarial noise instances for the constrained estimator"),
    "image2d": (cmd_image2d, "2-D blurred-image recovery with PALM and the LS baseline"),
    "selftest": (cmd_selftest, "run the bundled invariant checks"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--output-dir", help=f"where artifacts go (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    common.add_argument("overrides", nargs="*", metavar="key=value", help="dotted config overrides, e.g. palm.lam=1e-6")

    parser = argparse.ArgumentParser(prog="maskdeconv", description="Blind deconvolution from randomly masked observations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name in ("gen-masks", "simulate"):
            p.add_argument("--trial", type=int, default=0)
        if name in ("solve-cls", "solve-sparse", "palm"):
            p.add_argument("--data", help="directory written by `simulate`; default runs cfg.trials fresh trials")
        if name == "sweep":
            p.add_argument("--axis", choices=("L", "snr_db"), default="L")
            p.add_argument("--jobs", type=int, default=1)
        if name == "verify-lower-bound":
            p.add_argument("--t", type=float, default=0.1)
            p.add_argument("--no-cls", action="store_true", help="skip solving the constrained problem")
        if name == "image2d":
            p.add_argument("--solver", choices=("palm", "ls", "both"), default="both")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        if getattr(args, "jobs", 1) < 1:
            raise ValidationError("--jobs must be at least 1")
    except ValidationError as exc:
        print(f"invalid configuration: {exc}")
        return EXIT_INVALID
    out_dir = args.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    run = Run(args.command, cfg, out_dir)
    handler = COMMANDS[args.command][0]
    try:
        return handler(run, args)
    except ValidationError as exc:
        print(f"invalid input: {exc}")
        return EXIT_INVALID
    except (TrialError, ArithmeticError, RuntimeError, ValueError) as exc:
        path = run.write_json(f"{run.command}-failure.json", {"error": type(exc).__name__, "message": str(exc)})
        print(f"{run.command} failed: {exc}")
        print(f"failure report: {path}")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
