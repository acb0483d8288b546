"""Experiment configuration: a small validated tree that round-trips through JSON."""

from dataclasses import asdict, dataclass, fields, replace
from dataclasses import field as dc_field

import numpy as np

from ..errors import ValidationError
from ..solvers.report import INIT_MODES

SOLVERS = ("cls", "palm", "ls", "lasso", "truth")
FIELDS = ("real", "complex")
MASK_KINDS = ("rademacher", "quaternary_phase")


@dataclass(frozen=True)
class ClsSettings:
    max_iters: int = 5000
    tol: float = 1e-10


@dataclass(frozen=True)
class PalmSettings:
    lam: float = 1e-7
    max_iters: int = 200
    init_mode: str = "constructed"
    inner_max_iters: int = 500
    inner_tol: float = 1e-8


@dataclass(frozen=True)
class LassoSettings:
    """Stand-alone LASSO with an oracle-perturbed kernel ``h0`` at distance ``eps``."""

    eps: float = 0.0
    lam: float = None
    noise_c: float = 0.0
    max_iters: int = 5000
    tol: float = 1e-10


@dataclass(frozen=True)
class ImagingSettings:
    """The 2-D study. ``image`` is a PGM path, or null for the built-in point-source scene."""

    image: str = None
    size: int = 128
    sources: int = 6
    filter_size: int = 10
    sigma: float = 2.0
    L: int = 30
    snr_db: float = 40.0
    lam: float = 1e-7
    max_iters: int = 40
    inner_max_iters: int = 50
    inner_tol: float = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 50
    L: object = 10
    K: int = 0
    field: str = "real"
    mask: str = "rademacher"
    snr_db: object = None
    trials: int = 20
    seed: int = 0
    solver: str = "cls"
    h_support: object = None
    cls: ClsSettings = dc_field(default_factory=ClsSettings)
    palm: PalmSettings = dc_field(default_factory=PalmSettings)
    lasso: LassoSettings = dc_field(default_factory=LassoSettings)
    imaging: ImagingSettings = dc_field(default_factory=ImagingSettings)

    def __post_init__(self):
        for name, kind in _NESTED.items():
            v = getattr(self, name)
            if isinstance(v, dict):
                object.__setattr__(self, name, _build(kind, v, name + "."))
            elif not isinstance(v, kind):
                raise ValidationError(f"{name}: expected a {kind.__name__} or an object")
        errs = []
        if not _is_int(self.n) or self.n < 1:
            errs.append(f"n: must be a positive integer, got {self.n!r}")
        for L in self.L_grid:
            if not _is_int(L) or L < 1:
                errs.append(f"L: entries must be positive integers, got {L!r}")
        if not self.L_grid:
            errs.append("L: grid must be non-empty")
        if not _is_int(self.K) or not 0 <= self.K <= max(self.n, 0):
            errs.append(f"K: must be an integer in [0, n], got {self.K!r}")
        if self.field not in FIELDS:
            errs.append(f"field: must be one of {FIELDS}, got {self.field!r}")
        if self.mask not in MASK_KINDS:
            errs.append(f"mask: must be one of {MASK_KINDS}, got {self.mask!r}")
        for s in self.snr_grid:
            if s is not None and not (isinstance(s, (int, float)) and not isinstance(s, bool)):
                errs.append(f"snr_db: entries must be numbers or null, got {s!r}")
        if not self.snr_grid:
            errs.append("snr_db: grid must be non-empty")
        if not _is_int(self.trials) or self.trials < 1:
            errs.append(f"trials: must be >= 1, got {self.trials!r}")
        if not _is_int(self.seed) or self.seed < 0:
            errs.append(f"seed: must be a non-negative integer, got {self.seed!r}")
        if self.solver not in SOLVERS:
            errs.append(f"solver: must be one of {SOLVERS}, got {self.solver!r}")
        if self.palm.init_mode not in INIT_MODES:
            errs.append(f"palm.init_mode: must be one of {INIT_MODES}, got {self.palm.init_mode!r}")
        if not (self.palm.lam > 0):
            errs.append("palm.lam: must be positive")
        im = self.imaging
        for name in ("size", "sources", "filter_size", "L", "max_iters", "inner_max_iters"):
            v = getattr(im, name)
            if not _is_int(v) or v < 1:
                errs.append(f"imaging.{name}: must be a positive integer, got {v!r}")
        if _is_int(im.size) and _is_int(im.filter_size) and im.filter_size > im.size:
            errs.append("imaging.filter_size: must not exceed imaging.size")
        try:
            sup = self.support
            if sup is not None and (len(sup) == 0 or min(sup) < 0 or max(sup) >= self.n):
                errs.append(f"h_support: indices must lie in [0, {self.n})")
        except (TypeError, ValueError):
            errs.append(f"h_support: must be null, a count or a list of indices, got {self.h_support!r}")
        if errs:
            raise ValidationError("; ".join(errs))

    @property
    def L_grid(self):
        return list(self.L) if isinstance(self.L, (list, tuple)) else [self.L]

    @property
    def snr_grid(self):
        return list(self.snr_db) if isinstance(self.snr_db, (list, tuple)) else [self.snr_db]

    @property
    def support(self):
        """0-based support of ``h`` (``None`` for a dense kernel)."""
        s = self.h_support
        if s is None:
            return None
        if _is_int(s):
            return list(range(int(s)))
        return sorted({int(i) for i in s})

    def cell(self, L=None, snr_db=None):
        """This config pinned to a single ``(L, snr_db)`` cell."""
        return replace(
            self,
            L=self.L_grid[0] if L is None else L,
            snr_db=self.snr_grid[0] if snr_db is None else snr_db,
        )

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return _build(cls, d, "")


_NESTED = {"cls": ClsSettings, "palm": PalmSettings, "lasso": LassoSettings, "imaging": ImagingSettings}


def _build(kind, d, prefix):
    if not isinstance(d, dict):
        raise ValidationError(f"{prefix or 'config'}: expected an object")
    known = {f.name for f in fields(kind)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ValidationError(f"unknown key(s): {', '.join(prefix + k for k in unknown)}")
    kw = {}
    for k, v in d.items():
        if kind is ExperimentConfig and k in _NESTED:
            kw[k] = _build(_NESTED[k], v, prefix + k + ".")
        else:
            kw[k] = v
    try:
        return kind(**kw)
    except TypeError as exc:
        raise ValidationError(f"{prefix or 'config'}: {exc}") from exc


def _is_int(v):
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool)
