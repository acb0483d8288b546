"""Invariant checks that run without a test framework.

Each check builds a small random instance, compares a fast routine against a
direct computation and returns ``(name, passed, detail)``.
"""

import numpy as np

from .experiments.metrics import rmse
from .lifting import apply_A, apply_A_adjoint
from .masks import MaskDistribution, sample_mask_set
from .signal import TangentProjector, circular_convolve, circular_convolve_2d
from .solvers import project_nuclear_ball


def _rel(a, b):
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / max(np.linalg.norm(np.ravel(b)), 1e-300))


def _cgauss(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def check_convolution(rng):
    n = 23
    h, x = _cgauss(rng, n), _cgauss(rng, n)
    direct = np.array([sum(h[j] * x[(i - j) % n] for j in range(n)) for i in range(n)])
    err = _rel(circular_convolve(h, x), direct)
    return "convolution", err <= 1e-12, f"rel err {err:.2e}"


def check_convolution_2d(rng):
    h, x = rng.standard_normal((8, 8)), rng.standard_normal((8, 8))
    direct = np.zeros((8, 8))
    for i in range(8):
        for j in range(8):
            direct[i, j] = sum(h[a, b] * x[(i - a) % 8, (j - b) % 8] for a in range(8) for b in range(8))
    err = _rel(circular_convolve_2d(h, x).real, direct)
    return "convolution-2d", err <= 1e-10, f"rel err {err:.2e}"


def check_adjoint(rng):
    n, L = 12, 5
    ms = sample_mask_set(MaskDistribution.quaternary_phase(), n, L, int(rng.integers(2**31)))
    X, Y = _cgauss(rng, n, n), _cgauss(rng, n, L)
    lhs = np.vdot(apply_A(X, ms), Y)
    rhs = np.vdot(X, apply_A_adjoint(Y, ms))
    err = abs(lhs - rhs) / abs(lhs)
    return "adjoint", err <= 1e-10, f"rel err {err:.2e}"


def check_projector(rng):
    n = 9
    u, v = _cgauss(rng, n), _cgauss(rng, n)
    proj = TangentProjector(u / np.linalg.norm(u), v / np.linalg.norm(v))
    X = _cgauss(rng, n, n)
    T, C = proj.tangent(X), proj.complement(X)
    errs = (_rel(proj.tangent(T), T), _rel(T + C, X), abs(np.vdot(T, C)) / np.linalg.norm(X) ** 2)
    return "projector", max(errs) <= 1e-12, "idempotence {:.1e}, sum {:.1e}, orthogonality {:.1e}".format(*errs)


def check_nuclear_ball(rng):
    X = _cgauss(rng, 8, 8)
    radius = 0.5 * np.linalg.svd(X, compute_uv=False).sum()
    P = project_nuclear_ball(X, radius)
    excess = np.linalg.svd(P, compute_uv=False).sum() - radius
    return "nuclear-ball", excess <= 1e-10, f"excess {excess:.2e}"


def check_rmse(rng):
    h, x = _cgauss(rng, 10), _cgauss(rng, 10)
    worst = max(rmse(a * h, x / a, h, x) for a in (2.0, 1j, -0.5))
    return "rmse-scaling", worst <= 1e-12, f"max rmse {worst:.2e}"


CHECKS = (check_convolution, check_convolution_2d, check_adjoint, check_projector, check_nuclear_ball, check_rmse)


def run_selftest(seed=0):
    rng = np.random.default_rng(seed)
    return [(name, bool(ok), detail) for name, ok, detail in (check(rng) for check in CHECKS)]
