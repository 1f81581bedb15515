"""Independent reference computations used by the tests.

Nothing here calls the package's numerical routines: the histories are
re-interpolated with ``np.interp``, integrals come from ``scipy.integrate.quad``
or from dense trapezoid sweeps, and the kernel is read back only as raw
arrays ``(G_inf, taus, C)``.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad


def kernel_arrays(M):
    K = M.kernel
    return np.asarray(K.G_inf, float), np.asarray(K.taus, float), np.asarray(K.C, float)


def pl(grid, values, s):
    """Piecewise-linear interpolation with a constant tail (continuous histories only)."""
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    s = np.atleast_1d(np.asarray(s, float))
    return np.column_stack([np.interp(s, grid, values[:, c]) for c in range(values.shape[1])])


def response_quad(M, grid, values):
    """``G(0) X(0) + int_0^inf G'(s) X(s) ds`` by adaptive quadrature per segment."""
    G_inf, taus, C = kernel_arrays(M)
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    n = values.shape[1]
    G0 = G_inf + C.sum(axis=0)
    out = G0 @ values[0]
    for tau, Ci in zip(taus, C):
        m = np.zeros(n)
        for c in range(n):
            f = lambda s, c=c: np.exp(-s / tau) * np.interp(s, grid, values[:, c]) / tau
            acc = 0.0
            for a, b in zip(grid[:-1], grid[1:]):
                if b > a:
                    acc += quad(f, a, b, epsabs=1e-14, epsrel=1e-13)[0]
            acc += np.exp(-grid[-1] / tau) * values[-1, c]
            m[c] = acc
        out = out - Ci @ m
    return out


def _dense(grid, extra, nodes):
    span = float(grid[-1])
    pts = [np.linspace(0.0, span, nodes), grid] + [np.atleast_1d(e) for e in extra]
    return np.unique(np.concatenate(pts))


def dense_work(M, grid, values, upto=None, nodes=100_000):
    """Work ``int sigma . dX`` in physical time by a dense trapezoid sweep.

    The moments ``(1/tau) int e^{-v/tau} X(u+v) dv`` are accumulated from the
    far end with an exponential trapezoid step; the stress is then paired
    with the increments over each dense interval.
    """
    G_inf, taus, C = kernel_arrays(M)
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    upto = float(grid[-1]) if upto is None else float(upto)
    u = _dense(grid, [upto] if upto <= grid[-1] else [], nodes)
    if upto > grid[-1]:
        u = np.append(u, upto)
    X = pl(grid, values, u)
    G0 = G_inf + C.sum(axis=0)
    sigma = X @ G0.T
    h = np.diff(u)
    for tau, Ci in zip(taus, C):
        e = np.exp(-h / tau)
        m = np.empty_like(X)
        m[-1] = X[-1]
        for j in range(u.size - 2, -1, -1):
            m[j] = e[j] * m[j + 1] + 0.5 * (h[j] / tau) * (X[j] + e[j] * X[j + 1])
        sigma = sigma - m @ Ci.T
    inside = u[1:] <= upto * (1 + 1e-15)
    dX = np.diff(X, axis=0)[inside]
    savg = 0.5 * (sigma[:-1] + sigma[1:])[inside]
    return float(-np.sum(dX * savg))


def graffi_quad(M, grid, values):
    """``1/2 X0.G_inf X0 + 1/2 sum_i (1/tau_i) int e^{-s/tau_i} Y.C_i Y ds`` with ``Y = X(s) - X0``."""
    G_inf, taus, C = kernel_arrays(M)
    grid = np.asarray(grid, float)
    values = np.asarray(values, float)
    X0 = values[0]
    total = 0.5 * X0 @ G_inf @ X0
    for tau, Ci in zip(taus, C):

        def f(s):
            Y = pl(grid, values, s)[0] - X0
            return np.exp(-s / tau) * (Y @ Ci @ Y) / tau

        acc = sum(quad(f, a, b, epsabs=1e-14, epsrel=1e-12)[0] for a, b in zip(grid[:-1], grid[1:]) if b > a)
        YM = values[-1] - X0
        acc += np.exp(-grid[-1] / tau) * (YM @ Ci @ YM)
        total += 0.5 * acc
    return float(total)


def scalar_path_work(nodes, D, g_inf, c, tau, J0, sub=400):
    """Work of piecewise-linear scalar paths in physical time, vectorized over paths.

    ``nodes`` has shape ``(P, m+1)``: values at ``m+1`` equally spaced times on
    ``[0, D]`` (oldest first).  The internal variable obeys ``J' = (X - J)/tau``
    from ``J(0) = J0`` and is advanced exactly for linear ``X``; the stress is
    ``g_inf X + c (X - J)``.
    """
    nodes = np.asarray(nodes, float)
    P, m1 = nodes.shape
    seg = D / (m1 - 1)
    h = seg / sub
    e = np.exp(-h / tau)
    J = np.full(P, float(J0))
    W = np.zeros(P)
    for q in range(m1 - 1):
        x0, x1 = nodes[:, q], nodes[:, q + 1]
        r = (x1 - x0) / seg
        for k in range(sub):
            xa = x0 + r * (k * h)
            xb = xa + r * h
            Jb = xb - r * tau + (J - xa + r * tau) * e
            W += 0.5 * ((g_inf * xa + c * (xa - J)) + (g_inf * xb + c * (xb - Jb))) * (xb - xa)
            J = Jb
    return W
