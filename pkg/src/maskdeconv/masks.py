"""Coded-mask distributions, mask sets and the stacked mask matrix."""

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, ValidationError
from .rng import make_rng

__all__ = [
    "MaskDistribution",
    "MaskSet",
    "sample_mask_set",
    "singular_bounds",
    "save_mask_set",
    "load_mask_set",
]

_KINDS = {"rademacher": 0, "quaternary_phase": 1, "custom": 2}
_MOMENT_TOL = 1e-12


@dataclass(frozen=True)
class MaskDistribution:
    """A finite-support mask law with zero mean, unit power and ``|g| <= nu``.

    Use :meth:`rademacher`, :meth:`quaternary_phase` or :meth:`custom`
    rather than the constructor.
    """

    kind: str
    nu: float
    support: tuple
    probs: tuple

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown mask kind {self.kind!r}")
        s = np.asarray(self.support, dtype=complex)
        p = np.asarray(self.probs, dtype=float)
        if s.ndim != 1 or s.size == 0 or s.shape != p.shape:
            raise ValidationError("support and probs must be non-empty and of equal length")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(p))):
            raise ValidationError("support and probs must be finite")
        if np.any(p < 0) or abs(p.sum() - 1.0) > _MOMENT_TOL:
            raise ValidationError(f"probs must be non-negative and sum to 1, got sum {p.sum()!r}")
        if not np.isfinite(self.nu) or self.nu < 1:
            raise ValidationError(f"nu must be a finite real >= 1, got {self.nu!r}")
        if np.max(np.abs(s)) > self.nu * (1 + _MOMENT_TOL):
            raise ValidationError(f"support magnitude {np.max(np.abs(s))} exceeds nu={self.nu}")
        mean = np.sum(p * s)
        if abs(mean) > _MOMENT_TOL:
            raise ValidationError(f"distribution mean must be 0, got {mean}")
        power = np.sum(p * np.abs(s) ** 2)
        if abs(power - 1.0) > _MOMENT_TOL:
            raise ValidationError(f"second absolute moment must be 1, got {power}")

    @classmethod
    def rademacher(cls):
        return cls("rademacher", 1.0, (1.0 + 0j, -1.0 + 0j), (0.5, 0.5))

    @classmethod
    def quaternary_phase(cls):
        return cls("quaternary_phase", 1.0, (1 + 0j, -1 + 0j, 1j, -1j), (0.25,) * 4)

    @classmethod
    def custom(cls, support, probs, nu=None):
        """Finite-support law; `nu` defaults to the largest support magnitude."""
        support = tuple(complex(s) for s in support)
        probs = tuple(float(q) for q in probs)
        if nu is None:
            nu = max(1.0, max((abs(s) for s in support), default=1.0))
        return cls("custom", float(nu), support, probs)

    @classmethod
    def from_name(cls, name):
        if name == "rademacher":
            return cls.rademacher()
        if name in ("quaternary_phase", "quaternary"):
            return cls.quaternary_phase()
        raise ValidationError(f"unknown built-in mask kind {name!r}")

    @property
    def is_real(self):
        return bool(np.all(np.asarray(self.support).imag == 0))

    def to_dict(self):
        return {
            "kind": self.kind,
            "nu": self.nu,
            "support": [[s.real, s.imag] for s in self.support],
            "probs": list(self.probs),
        }

    @classmethod
    def from_dict(cls, d):
        support = tuple(complex(re, im) for re, im in d["support"])
        return cls(d["kind"], float(d["nu"]), support, tuple(float(q) for q in d["probs"]))


@dataclass(frozen=True)
class MaskSet:
    """``L`` masks of a common signal shape.

    ``values[l]`` is mask ``d_l``; for 1-D signals :attr:`stacked` is the
    ``n x L`` matrix ``D_g`` whose column ``l`` is ``d_l``.
    """

    values: np.ndarray
    distribution: MaskDistribution
    seed: int
    _digest: str = field(default="", repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex, order="C")
        if v.ndim < 2:
            raise DimensionError("mask values must have shape (L, *signal_shape)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_digest", hashlib.sha256(v.tobytes()).hexdigest())

    @property
    def L(self):
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape[1:]

    @property
    def n(self):
        return int(np.prod(self.shape))

    @property
    def stacked(self):
        return self.values.reshape(self.L, -1).T

    @property
    def digest(self):
        return self._digest

    def subset(self, index):
        """Masks ``index`` (a slice or index array) as a new set."""
        return MaskSet(self.values[index], self.distribution, self.seed)

    def __eq__(self, other):
        if not isinstance(other, MaskSet):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.distribution == other.distribution
            and self.values.shape == other.values.shape
            and self.digest == other.digest
        )

    __hash__ = None


def sample_mask_set(dist, n, L, seed, shape=None):
    """Draw ``L`` i.i.d. masks of length `n` (or of 2-D `shape`) from `dist`.

    Identical ``(dist, n, L, seed)`` reproduce identical masks.
    """
    if not isinstance(dist, MaskDistribution):
        raise ValidationError("dist must be a MaskDistribution")
    shape = (int(n),) if shape is None else tuple(int(s) for s in shape)
    if int(np.prod(shape)) != n or n < 1 or L < 1:
        raise DimensionError(f"need n >= 1 matching shape {shape} and L >= 1")
    rng = make_rng(seed)
    support = np.asarray(dist.support, dtype=complex)
    idx = rng.choice(support.size, size=(int(L), *shape), p=np.asarray(dist.probs))
    return MaskSet(support[idx], dist, int(seed))


def singular_bounds(ms):
    """Smallest and largest singular values of ``D_g``."""
    D = ms.stacked
    n, L = D.shape
    if n < L:
        raise DimensionError(f"singular bounds need n >= L, got n={n}, L={L}")
    if n <= 4096:
        s = np.linalg.svd(D, compute_uv=False)
    else:
        # the L x L Gram is tiny; its eigenvalues are the squared singular values
        s = np.sqrt(np.clip(np.linalg.eigvalsh(D.conj().T @ D), 0, None))
    return float(np.min(s)), float(np.max(s))


# binary layout: magic, version, kind code, ndim, L, n, nu, seed, dims...,
# then the n x L matrix D_g column-major as interleaved (re, im) float64
_MAGIC = b"BDMK"
_HEADER = struct.Struct("<4sHHIQQdQ")


def save_mask_set(ms, path):
    """Write `ms` as ``path`` (binary) plus ``path.json`` (metadata sidecar)."""
    path = Path(path)
    header = _HEADER.pack(
        _MAGIC, 1, _KINDS[ms.distribution.kind], len(ms.shape), ms.L, ms.n,
        ms.distribution.nu, ms.seed,
    )
    dims = struct.pack(f"<{len(ms.shape)}Q", *ms.shape)
    payload = ms.values.tobytes(order="C")
    path.write_bytes(header + dims + payload)
    meta = {
        "n": ms.n,
        "L": ms.L,
        "shape": list(ms.shape),
        "seed": ms.seed,
        "distribution": ms.distribution.to_dict(),
        "sha256": ms.digest,
    }
    _sidecar(path).write_text(json.dumps(meta, indent=2))
    return path


def load_mask_set(path):
    path = Path(path)
    raw = path.read_bytes()
    magic, _version, kind, ndim, L, n, nu, seed = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise ValidationError(f"{path} is not a mask-set file")
    off = _HEADER.size
    shape = struct.unpack_from(f"<{ndim}Q", raw, off)
    off += 8 * ndim
    values = np.frombuffer(raw, dtype="<c16", count=L * n, offset=off).reshape(L, *shape)
    meta = json.loads(_sidecar(path).read_text())
    dist = MaskDistribution.from_dict(meta["distribution"])
    if _KINDS[dist.kind] != kind or dist.nu != nu:
        raise ValidationError("binary header and JSON sidecar disagree")
    ms = MaskSet(values.astype(complex), dist, int(seed))
    if ms.digest != meta["sha256"]:
        raise ValidationError("mask payload checksum mismatch")
    return ms


def _sidecar(path):
    return Path(str(path) + ".json")
