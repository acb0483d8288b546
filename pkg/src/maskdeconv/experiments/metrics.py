"""Recovery metrics that are blind to the scale/phase ambiguity of ``(h, x)``."""

import numpy as np

from ..errors import ArgumentError, DimensionError

SUCCESS_RMSE = 1e-3


def rmse(h_est, x_est, h, x):
    """Relative error ``‖h_est x_estᵀ - h xᵀ‖_F / ‖h xᵀ‖_F``.

    The difference is the rank-2 product ``[h_est, -h] [x_est, x]ᵀ``; its
    Frobenius norm is read off the two small triangular QR factors, so no
    ``n x n`` matrix is formed and near-zero errors keep their precision.
    """
    vecs = [np.asarray(v, dtype=complex).ravel() for v in (h_est, x_est, h, x)]
    n = vecs[2].size
    if any(v.size != n for v in vecs):
        raise DimensionError("all four vectors must have the same number of entries")
    scale = np.linalg.norm(vecs[2]) * np.linalg.norm(vecs[3])
    if scale == 0:
        raise ArgumentError("the reference outer product is zero")
    if np.array_equal(vecs[0], vecs[2]) and np.array_equal(vecs[1], vecs[3]):
        return 0.0
    left = np.linalg.qr(np.column_stack([vecs[0], -vecs[2]]), mode="r")
    right = np.linalg.qr(np.column_stack([vecs[1], vecs[3]]), mode="r")
    return float(np.linalg.norm(left @ right.T) / scale)


def snr_out_db(err):
    """Reconstruction SNR ``-20 log10(err)`` (``+inf`` for an exact recovery)."""
    if err <= 0:
        return float("inf")
    return float(-20.0 * np.log10(err))


def is_success(err):
    return bool(err < SUCCESS_RMSE)
