"""Compiled inner loop for small dense LASSO problems.

The loop mirrors ``sparse._mfista_gram_py`` statement for statement; it only
exists because the reference version spends most of its time in interpreter
overhead when ``n`` is a few dozen.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft_into(out, v, tau):
    floor = max(tau, 2.2250738585072014e-308)
    for i in range(v.size):
        m = abs(v[i])
        out[i] = v[i] * (1.0 - tau / max(m, floor))


@njit(cache=True)
def _matvec(M, v, out):
    n = M.shape[0]
    for i in range(n):
        acc = 0j
        for j in range(n):
            acc += M[i, j] * v[j]
        out[i] = acc


@njit(cache=True)
def mfista_gram(M, b, lam, x0, s, max_iters, tol, obj0):
    n = x0.size
    x = x0.copy()
    Mx = np.empty(n, np.complex128)
    _matvec(M, x, Mx)
    l1x = 0.0
    for i in range(n):
        l1x += abs(x[i])
    history = np.empty(max_iters + 1)
    history[0] = obj0
    obj = obj0
    z = x.copy()
    Mz = Mx.copy()
    t = 1.0
    u = np.empty(n, np.complex128)
    Mu = np.empty(n, np.complex128)
    w = np.empty(n, np.complex128)
    x_prev = np.empty(n, np.complex128)
    Mx_prev = np.empty(n, np.complex128)
    converged = False
    k = 0
    for k in range(1, max_iters + 1):
        for i in range(n):
            w[i] = z[i] - s * (Mz[i] - b[i])
        _soft_into(u, w, s * lam)
        _matvec(M, u, Mu)
        l1u = 0.0
        delta = 0.0
        for i in range(n):
            l1u += abs(u[i])
            d = u[i] - x[i]
            g = 0.5 * (Mu[i] + Mx[i]) - b[i]
            delta += d.real * g.real + d.imag * g.imag
        delta += lam * (l1u - l1x)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        a = t / t_next
        c = (t - 1.0) / t_next
        x_prev[:] = x
        Mx_prev[:] = Mx
        if delta <= 0.0:
            x[:] = u
            Mx[:] = Mu
            l1x = l1u
            obj += delta
        for i in range(n):
            z[i] = x[i] + a * (u[i] - x[i]) + c * (x[i] - x_prev[i])
            Mz[i] = Mx[i] + a * (Mu[i] - Mx[i]) + c * (Mx[i] - Mx_prev[i])
        t = t_next
        history[k] = obj
        for i in range(n):
            w[i] = x[i] - s * (Mx[i] - b[i])
        _soft_into(u, w, s * lam)
        res = 0.0
        for i in range(n):
            r = x[i] - u[i]
            res += r.real * r.real + r.imag * r.imag
        if np.sqrt(res) <= tol:
            converged = True
            break
    return x, history[: k + 1], k, converged
