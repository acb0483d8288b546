"""Solver configurations and the common result record."""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ValidationError

INIT_MODES = ("constructed", "randomized", "deterministic")


def _positive(name, value):
    if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be a positive finite real, got {value!r}")


def _count(name, value, low=1):
    if isinstance(value, bool) or not isinstance(value, int) or value < low:
        raise ValidationError(f"{name} must be an integer >= {low}, got {value!r}")


@dataclass(frozen=True)
class ClsConfig:
    """Projected gradient on ``min ‖Ŷ - 𝒜(X)‖_F s.t. ‖X‖_* <= radius``."""

    radius: float
    max_iters: int = 5000
    step: object = "auto"
    tol: float = 1e-10
    patience: int = 5

    def __post_init__(self):
        _positive("radius", self.radius)
        _positive("tol", self.tol)
        _count("max_iters", self.max_iters)
        _count("patience", self.patience)
        if self.step != "auto":
            _positive("step", self.step)


@dataclass(frozen=True)
class LassoConfig:
    lam: float
    max_iters: int = 500
    tol: float = 1e-8

    def __post_init__(self):
        _positive("lam", self.lam)
        _positive("tol", self.tol)
        _count("max_iters", self.max_iters)


@dataclass(frozen=True)
class PalmConfig:
    lam: float = 1e-7
    max_iters: int = 200
    init_mode: str = "constructed"
    inner: LassoConfig = None
    tol: float = 1e-10
    seed: int = 0
    complex_init: bool = True

    def __post_init__(self):
        _positive("lam", self.lam)
        _positive("tol", self.tol)
        _count("max_iters", self.max_iters)
        _count("seed", self.seed, low=0)
        if self.init_mode not in INIT_MODES:
            raise ValidationError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        if self.inner is None:
            object.__setattr__(self, "inner", LassoConfig(self.lam))
        elif not isinstance(self.inner, LassoConfig):
            raise ValidationError("inner must be a LassoConfig")


@dataclass
class SolverReport:
    """What a solver returns: estimates, objective trace and run bookkeeping."""

    h: np.ndarray = None
    x: np.ndarray = None
    X: np.ndarray = None
    objective_history: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    wall_time: float = 0.0
    warnings: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def to_dict(self, decimate=None, include_estimates=True):
        hist = list(map(float, self.objective_history))
        if decimate and len(hist) > decimate:
            keep = np.unique(np.linspace(0, len(hist) - 1, decimate).round().astype(int))
            hist = [hist[i] for i in keep]
        out = {
            "config": self.config,
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time_s": self.wall_time,
            "objective_history": hist,
            "final_objective": float(self.objective_history[-1]) if self.objective_history else None,
            "warnings": list(self.warnings),
            "extras": _jsonable(self.extras),
        }
        if include_estimates:
            for name in ("h", "x"):
                v = getattr(self, name)
                if v is not None:
                    out[name] = _jsonable(v)
        return out

    def to_json(self, path=None, **kw):
        text = json.dumps(self.to_dict(**kw), indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def config_dict(cfg):
    return _jsonable(asdict(cfg))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": obj.real.tolist(), "im": obj.imag.tolist()}
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj
