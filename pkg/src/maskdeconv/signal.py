r"""Complex signal primitives.

All transforms use the unnormalized forward DFT

.. math:: F_{jk} = \exp(-2\pi i\, jk / n), \qquad j, k = 0, \dots, n-1,

with the ``1/n`` factor carried by the inverse, which is exactly the
convention of :func:`numpy.fft.fft`. Signals are plain 1-D complex
ndarrays; indices are 0-based throughout.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, DimensionError, NormalizationError

__all__ = [
    "as_signal",
    "dft",
    "idft",
    "dft_matrix",
    "circular_convolve",
    "circular_correlate",
    "circular_convolve_2d",
    "cyclic_shift",
    "apply_circulant",
    "circulant_matrix",
    "TangentProjector",
    "project_tangent",
    "coherence_mu",
    "mutual_coherence_mu_h",
    "phase_dist",
    "optimal_phase",
]


def as_signal(z, n=None, name="signal"):
    """Return `z` as a finite 1-D complex array, optionally of length `n`."""
    z = np.asarray(z)
    if z.ndim != 1 or z.size < 1:
        raise DimensionError(f"{name} must be a non-empty 1-D array, got shape {z.shape}")
    if n is not None and z.size != n:
        raise DimensionError(f"{name} has length {z.size}, expected {n}")
    z = z.astype(complex, copy=False)
    if not np.all(np.isfinite(z)):
        raise ArgumentError(f"{name} contains non-finite entries")
    return z


def _same_length(a, b, names=("h", "x")):
    a = as_signal(a, name=names[0])
    b = as_signal(b, a.size, name=names[1])
    return a, b


def dft(z, n=None):
    """Unnormalized forward DFT of a length-`n` signal."""
    return np.fft.fft(as_signal(z, n))


def idft(z, n=None):
    """Inverse of :func:`dft` (carries the ``1/n`` factor)."""
    return np.fft.ifft(as_signal(z, n))


@lru_cache(maxsize=16)
def _dft_matrix(n):
    j = np.arange(n)
    # reduce the exponent mod n first so large j*k does not lose phase accuracy
    F = np.exp(-2j * np.pi * (np.outer(j, j) % n) / n)
    F.setflags(write=False)
    return F


def dft_matrix(n):
    """Dense ``n x n`` DFT matrix (cached, read-only)."""
    if n < 1:
        raise ArgumentError("n must be positive")
    return _dft_matrix(int(n))


def circular_convolve(h, x):
    """Circular convolution ``h ⊛ x = C_h x`` via the convolution theorem."""
    h, x = _same_length(h, x)
    return np.fft.ifft(np.fft.fft(h) * np.fft.fft(x))


def circular_correlate(h, v):
    """Apply the adjoint circulant: ``C_h^* v``."""
    h, v = _same_length(h, v, ("h", "v"))
    return np.fft.ifft(np.conj(np.fft.fft(h)) * np.fft.fft(v))


def circular_convolve_2d(h, x):
    """2-D circular convolution (periodic in both axes) via the 2-D DFT."""
    h = np.asarray(h, dtype=complex)
    x = np.asarray(x, dtype=complex)
    if h.ndim != 2 or h.shape != x.shape:
        raise DimensionError(f"expected two 2-D arrays of equal shape, got {h.shape} and {x.shape}")
    return np.fft.ifft2(np.fft.fft2(h) * np.fft.fft2(x))


def cyclic_shift(z, tau):
    """Cyclic shift ``s_tau(z)``: ``out[j] = z[(j - tau) mod n]``.

    ``tau`` may take any value in ``0..n``; both ends give `z` back.
    """
    z = as_signal(z)
    n = z.size
    if isinstance(tau, bool) or not isinstance(tau, (int, np.integer)):
        raise ArgumentError(f"tau must be an integer, got {tau!r}")
    if not 0 <= tau <= n:
        raise ArgumentError(f"tau must lie in [0, {n}], got {tau}")
    return np.roll(z, int(tau))


def _reverse(v):
    # v[-m mod n]
    return np.roll(v[::-1], 1)


def apply_circulant(z, v, variant="standard"):
    """Multiply `v` by the circulant generated by `z` without forming it.

    ``standard`` gives ``C_z v = z ⊛ v``. ``check`` gives ``Č_z v`` where
    ``Č_z[j, k] = z[(j + k) mod n]``, the Hankel-like arrangement whose
    first row and first column both equal `z`.
    """
    z, v = _same_length(z, v, ("z", "v"))
    if variant == "standard":
        return np.fft.ifft(np.fft.fft(z) * np.fft.fft(v))
    if variant == "check":
        return np.fft.ifft(np.fft.fft(z) * np.fft.fft(_reverse(v)))
    raise ArgumentError(f"unknown circulant variant {variant!r}")


def circulant_matrix(z, variant="standard"):
    """Dense circulant (small `n` only; used by oracles and tests)."""
    z = as_signal(z, name="z")
    n = z.size
    j = np.arange(n)
    if variant == "standard":
        return z[(j[:, None] - j[None, :]) % n]
    if variant == "check":
        return z[(j[:, None] + j[None, :]) % n]
    raise ArgumentError(f"unknown circulant variant {variant!r}")


@dataclass(frozen=True)
class TangentProjector:
    r"""Projectors onto the tangent space ``T = {ĥ vᵀ + u xᵀ}`` and its complement.

    Both generators must have unit l2 norm.
    """

    h_hat: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        h = as_signal(self.h_hat, name="h_hat")
        x = as_signal(self.x, h.size, name="x")
        for name, v in (("h_hat", h), ("x", x)):
            if abs(np.linalg.norm(v) - 1.0) > 1e-10:
                raise NormalizationError(f"{name} must have unit norm, got {np.linalg.norm(v):.3e}")
        object.__setattr__(self, "h_hat", h)
        object.__setattr__(self, "x", x)

    def _check(self, X):
        X = np.asarray(X, dtype=complex)
        n = self.h_hat.size
        if X.shape != (n, n):
            raise DimensionError(f"expected a {n}x{n} matrix, got {X.shape}")
        return X

    def tangent(self, X):
        X = self._check(X)
        h, xb = self.h_hat, np.conj(self.x)
        hX = np.outer(h, np.conj(h) @ X)  # ĥĥ* X
        Xx = np.outer(X @ xb, self.x)  # X x̄ xᵀ
        hXx = (np.conj(h) @ X @ xb) * np.outer(h, self.x)  # ĥĥ* X x̄ xᵀ
        return hX + Xx - hXx

    def complement(self, X):
        X = self._check(X)
        h, xb = self.h_hat, np.conj(self.x)
        left = X - np.outer(h, np.conj(h) @ X)
        return left - np.outer(left @ xb, self.x)


def project_tangent(X, proj, part="T"):
    """Apply ``P_T`` (``part="T"``) or ``P_{T⊥}`` (``part="Tperp"``)."""
    if part == "T":
        return proj.tangent(X)
    if part == "Tperp":
        return proj.complement(X)
    raise ArgumentError(f"part must be 'T' or 'Tperp', got {part!r}")


def coherence_mu(h):
    """Spectral coherence ``‖ĥ‖∞² / ‖h‖₂²`` of a time-domain kernel.

    By Parseval the value lies in ``[1, n]``.
    """
    h = as_signal(h, name="h")
    nrm2 = np.vdot(h, h).real
    if nrm2 == 0:
        raise ArgumentError("coherence of the zero vector is undefined")
    return float(np.max(np.abs(np.fft.fft(h))) ** 2 / nrm2)


def mutual_coherence_mu_h(h, support):
    """Largest normalized correlation between cyclic shifts of `h` over `support`.

    ``max_{i≠j} |<s_i(h), s_j(h)>| / ‖h‖²``; zero for a single index.
    """
    h = as_signal(h, name="h")
    support = sorted({int(i) for i in support})
    if not support:
        raise ArgumentError("support must be non-empty")
    n = h.size
    if support[0] < 0 or support[-1] >= n:
        raise ArgumentError(f"support indices must lie in [0, {n})")
    if len(support) == 1:
        return 0.0
    # <s_i h, s_j h> depends only on (j - i) mod n; direct sums keep exact
    # zeros for non-overlapping shifts
    lags = {(j - i) % n for i in support for j in support if i != j}
    best = max(abs(np.vdot(h, np.roll(h, lag))) for lag in lags)
    return float(best / np.vdot(h, h).real)


def phase_dist(x, y):
    """``min_θ ‖x - e^{iθ} y‖₂`` in closed form.

    Equals ``sqrt(‖x‖² + ‖y‖² - 2|<y, x>|)``; evaluated at the optimal phase
    instead so that near-zero distances keep full precision.
    """
    x, y = _same_length(x, y, ("x", "y"))
    c = np.vdot(y, x)
    phase = c / abs(c) if c != 0 else 1.0
    return float(np.linalg.norm(x - phase * y))


def optimal_phase(x, y):
    """The unit scalar ``e^{iθ}`` attaining :func:`phase_dist` ``(x, y)``."""
    c = np.vdot(as_signal(y), as_signal(x))
    return c / abs(c) if c != 0 else 1.0 + 0j
