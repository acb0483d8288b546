r"""The measurement map in the time and frequency domains.

Observations are ``y_l = h ⊛ (d_l ⊙ x) + z_l`` for ``l = 0..L-1``. In the
frequency domain the stacked, normalized data ``Ŷ`` (column ``l`` equal to
``dft(y_l)/√L``) satisfies ``Ŷ = 𝒜(ĥxᵀ) + Ẑ`` with

.. math:: 𝒜(X) = L^{-1/2} (F ⊙ X) D_g, \qquad
          𝒜^*(Y) = L^{-1/2}\, \bar F ⊙ (Y D_g^*).
"""

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, DegenerateInputError, DimensionError, ValidationError
from .masks import MaskSet
from .rng import make_rng
from .signal import as_signal, dft_matrix

__all__ = [
    "MeasurementSet",
    "forward_time",
    "apply_A",
    "apply_A_adjoint",
    "add_awgn",
    "adversarial_direction",
    "adversarial_noise",
    "AdversarialNoise",
    "nuclear_norm",
    "save_measurements",
    "load_measurements",
]


def _fftn(a, ndim):
    axes = tuple(range(-ndim, 0))
    return np.fft.fftn(a, axes=axes)


def _ifftn(a, ndim):
    axes = tuple(range(-ndim, 0))
    return np.fft.ifftn(a, axes=axes)


@dataclass(frozen=True)
class MeasurementSet:
    """Time-domain observations plus the noise that went into them.

    ``time_obs`` has shape ``(L, *signal_shape)``. ``noise`` is the injected
    ``Z`` in the same layout, or ``None`` for clean data.
    """

    time_obs: np.ndarray
    noise: np.ndarray = None
    mask_digest: str = ""
    snr_db: float = None

    def __post_init__(self):
        y = np.array(self.time_obs, dtype=complex)
        if y.ndim < 2:
            raise DimensionError("time_obs must have shape (L, *signal_shape)")
        if not np.all(np.isfinite(y)):
            raise ArgumentError("observations contain non-finite entries")
        y.setflags(write=False)
        object.__setattr__(self, "time_obs", y)
        if self.noise is not None:
            z = np.array(self.noise, dtype=complex)
            if z.shape != y.shape:
                raise DimensionError(f"noise shape {z.shape} != observation shape {y.shape}")
            z.setflags(write=False)
            object.__setattr__(self, "noise", z)

    @property
    def L(self):
        return self.time_obs.shape[0]

    @property
    def shape(self):
        return self.time_obs.shape[1:]

    @property
    def n(self):
        return int(np.prod(self.shape))

    @property
    def freq_obs(self):
        """``Ŷ`` as an ``n x L`` matrix (multi-dimensional signals are flattened row-major)."""
        Y = _fftn(self.time_obs, len(self.shape)) / np.sqrt(self.L)
        return Y.reshape(self.L, -1).T

    @property
    def noise_hat(self):
        """``Ẑ``, normalized like :attr:`freq_obs`; zero when no noise was injected."""
        if self.noise is None:
            return np.zeros((self.n, self.L), dtype=complex)
        Z = _fftn(self.noise, len(self.shape)) / np.sqrt(self.L)
        return Z.reshape(self.L, -1).T

    @property
    def clean_obs(self):
        if self.noise is None:
            return self.time_obs
        return self.time_obs - self.noise


def _check_masks(ms, shape):
    if not isinstance(ms, MaskSet):
        raise ValidationError("ms must be a MaskSet")
    if ms.shape != tuple(shape):
        raise DimensionError(f"mask shape {ms.shape} does not match signal shape {tuple(shape)}")


def forward_time(h, x, ms, noise=None):
    """Synthesize ``y_l = h ⊛ (d_l ⊙ x) + z_l`` for every mask in `ms`.

    `h` and `x` may be 1-D or 2-D (2-D convolution is circular in both axes).
    `noise`, if given, has the layout of the observations, ``(L, *shape)``.
    """
    h = np.asarray(h, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if h.shape != x.shape or h.ndim not in (1, 2) or h.size == 0:
        raise DimensionError(f"h and x must share a 1-D or 2-D shape, got {h.shape} and {x.shape}")
    _check_masks(ms, h.shape)
    nd = h.ndim
    y = _ifftn(_fftn(h, nd)[None] * _fftn(ms.values * x[None], nd), nd)
    if noise is not None:
        noise = np.asarray(noise, dtype=complex)
        if noise.shape != y.shape:
            raise DimensionError(f"noise must have shape {y.shape}, got {noise.shape}")
        y = y + noise
    return MeasurementSet(y, noise, ms.digest)


def _check_lifted(X, ms):
    X = np.asarray(X, dtype=complex)
    n = ms.n
    if X.shape != (n, n):
        raise DimensionError(f"expected an {n}x{n} lifted matrix, got {X.shape}")
    return X


def apply_A(X, ms):
    """``𝒜(X) = (F ⊙ X) D_g / √L`` as an ``n x L`` matrix."""
    X = _check_lifted(X, ms)
    return (dft_matrix(ms.n) * X) @ ms.stacked / np.sqrt(ms.L)


def apply_A_adjoint(Y, ms):
    """``𝒜^*(Y) = conj(F) ⊙ (Y D_g^*) / √L`` as an ``n x n`` matrix."""
    Y = np.asarray(Y, dtype=complex)
    if Y.shape != (ms.n, ms.L):
        raise DimensionError(f"expected an {ms.n}x{ms.L} matrix, got {Y.shape}")
    return np.conj(dft_matrix(ms.n)) * (Y @ ms.stacked.conj().T) / np.sqrt(ms.L)


def add_awgn(meas, snr_db, seed):
    """Add complex circular Gaussian noise at `snr_db` relative to the measured signal power.

    Signal power is the mean of ``|y|²`` over all ``L`` observations jointly.
    ``snr_db = None`` or ``+inf`` leaves the data untouched and records ``Z = 0``.
    """
    if snr_db is None or (np.isscalar(snr_db) and snr_db == np.inf):
        z = np.zeros_like(meas.time_obs) if meas.noise is None else meas.noise
        return MeasurementSet(meas.time_obs, z, meas.mask_digest, meas.snr_db)
    snr_db = float(snr_db)
    if not np.isfinite(snr_db):
        raise ArgumentError(f"snr_db must be finite or +inf, got {snr_db}")
    y = meas.time_obs
    power = np.mean(np.abs(y) ** 2)
    var = power * 10.0 ** (-snr_db / 10.0)
    rng = make_rng(seed)
    z = np.sqrt(var / 2) * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    total = z if meas.noise is None else meas.noise + z
    return MeasurementSet(y + z, total, meas.mask_digest, snr_db)


def nuclear_norm(X):
    return float(np.sum(np.linalg.svd(X, compute_uv=False)))


def adversarial_direction(h_hat, x, ms):
    """The descent direction ``X₀ = -βĥxᵀ + W`` of the worst-case noise construction.

    Returns ``(X0, W, beta, x_perp)``. ``W`` lies in the null space of 𝒜, and
    ``x_perp`` is `x` with its component in ``span(conj(d_l))`` removed.
    """
    h_hat = as_signal(h_hat, name="h_hat")
    x = as_signal(x, h_hat.size, name="x")
    if ms.shape != (h_hat.size,):
        raise DimensionError("masks must be 1-D and match the signal length")
    for name, v in (("h_hat", h_hat), ("x", x)):
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ArgumentError(f"{name} must have unit norm")
    if h_hat[0] == 0:
        raise ArgumentError("h_hat[0] must be non-zero; permute indices first")
    n, L = ms.n, ms.L
    D = ms.stacked
    Db = np.conj(D)
    coef = np.linalg.solve(D.T @ Db, D.T @ x)
    x_perp = x - Db @ coef
    nrm = np.linalg.norm(x_perp)
    if nrm < 1e-10:
        raise DegenerateInputError(f"x lies in span(conj(D_g)) numerically (residual {nrm:.2e})")
    nu = ms.distribution.nu
    W = np.zeros((n, n), dtype=complex)
    W[0] = -(h_hat[0] / (nrm * abs(h_hat[0]))) * x_perp
    beta = 2 * nu * np.sqrt(L * np.log(n)) / np.sqrt(n - n / (2 * nu**2))
    X0 = -beta * np.outer(h_hat, x) + W
    return X0, W, float(beta), x_perp


class AdversarialNoise(NamedTuple):
    z_hat: np.ndarray
    x_tilde: np.ndarray
    beta: float


def adversarial_noise(h_hat, x, ms, t):
    """Worst-case frequency-domain noise ``Ẑ = 𝒜(t'X₀)`` and the matching ``X̃ = t'X₀``.

    ``t'`` is the largest scale in ``[0, t]`` keeping ``ĥxᵀ + t'X₀`` inside
    the nuclear ball of radius ``‖ĥxᵀ‖_*``, found by bisection.
    """
    if not np.isfinite(t) or t < 0:
        raise ArgumentError(f"t must be a finite non-negative real, got {t}")
    X0, _, beta, _ = adversarial_direction(h_hat, x, ms)
    base = np.outer(as_signal(h_hat), as_signal(x))
    R = nuclear_norm(base)

    def feasible(s):
        return nuclear_norm(base + s * X0) <= R + 1e-10

    if feasible(t):
        tp = float(t)
    else:
        lo, hi = 0.0, float(t)
        while hi - lo > 1e-12 * max(1.0, t):
            mid = 0.5 * (lo + hi)
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        tp = lo
    X_tilde = tp * X0
    return AdversarialNoise(apply_A(X_tilde, ms), X_tilde, beta)


_MAGIC = b"BDMS"
_HEADER = struct.Struct("<4sHHIQQ")


def save_measurements(meas, path):
    """Binary observations (plus optional noise record) and a JSON sidecar."""
    path = Path(path)
    has_noise = meas.noise is not None
    header = _HEADER.pack(_MAGIC, 1, int(has_noise), len(meas.shape), meas.L, meas.n)
    dims = struct.pack(f"<{len(meas.shape)}Q", *meas.shape)
    body = meas.time_obs.tobytes()
    if has_noise:
        body += meas.noise.tobytes()
    path.write_bytes(header + dims + body)
    meta = {
        "n": meas.n,
        "L": meas.L,
        "shape": list(meas.shape),
        "has_noise": has_noise,
        "snr_db": meas.snr_db,
        "mask_digest": meas.mask_digest,
        "sha256": hashlib.sha256(body).hexdigest(),
    }
    Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))
    return path


def load_measurements(path):
    path = Path(path)
    raw = path.read_bytes()
    magic, _version, has_noise, ndim, L, n = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise ValidationError(f"{path} is not a measurement file")
    off = _HEADER.size
    shape = struct.unpack_from(f"<{ndim}Q", raw, off)
    off += 8 * ndim
    meta = json.loads(Path(str(path) + ".json").read_text())
    if hashlib.sha256(raw[off:]).hexdigest() != meta["sha256"]:
        raise ValidationError("measurement payload checksum mismatch")
    y = np.frombuffer(raw, dtype="<c16", count=L * n, offset=off).reshape(L, *shape)
    z = None
    if has_noise:
        z = np.frombuffer(raw, dtype="<c16", count=L * n, offset=off + 16 * L * n)
        z = z.reshape(L, *shape)
    return MeasurementSet(y, z, meta["mask_digest"], meta["snr_db"])
