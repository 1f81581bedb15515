"""Exact integrals of piecewise-linear records against decaying exponentials.

Everything here works on a node grid ``g`` (shape ``(M+1,)``, non-decreasing,
a repeated lag being a jump) and nodal values ``V`` of shape
``(..., M+1, m)`` so that many histories sharing a grid are processed at
once.  Relaxation times come in as a 1-d array ``taus``.

The central quantity is the exponential moment of the record seen from lag
``s``::

    J(s) = (1/tau) * int_0^inf exp(-u/tau) X(s + u) du

which for a piecewise-linear record with a constant tail satisfies an exact
backward recursion seeded by ``J(s_M) = X(s_M)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammainc

_SERIES_CUTOFF = 1.0
_SERIES_TERMS = 24


def phi123(x):
    """``phi_k(-x)`` for k = 1, 2, 3 and ``x >= 0``.

    ``phi_k(z) = sum_j z^j / (j + k)!``; evaluated by series below
    ``x = 1`` and by the downward-stable recurrence above.
    """
    x = np.asarray(x, dtype=float)
    small = x < _SERIES_CUTOFF
    out = []
    xs = np.where(small, x, 0.0)
    xl = np.where(small, 1.0, x)
    p1 = -np.expm1(-xl) / xl
    p2 = (1.0 - p1) / xl
    p3 = (0.5 - p2) / xl
    if not np.any(small):
        return p1, p2, p3
    for k, large in zip((1, 2, 3), (p1, p2, p3)):
        term = np.full_like(x, 1.0 / _factorial(k))
        acc = term.copy()
        for j in range(1, _SERIES_TERMS):
            term = term * (-xs) / (j + k)
            acc = acc + term
        out.append(np.where(small, acc, large))
    return tuple(out)


def _factorial(k: int) -> float:
    return float(np.prod(np.arange(1, k + 1))) if k > 0 else 1.0


def segment_weights(grid: np.ndarray, taus: np.ndarray):
    """Per-term, per-segment coefficients of the moment recursion.

    Returns ``decay, wa, wb, x`` each of shape ``(T, M)``:
    ``J(a) = decay * J(b) + wa * X(a) + wb * X(b)``.
    """
    L = np.diff(grid)
    x = L[None, :] / taus[:, None]
    p1, p2, _ = phi123(x)
    decay = np.exp(-x)
    return decay, x * p2, x * (p1 - p2), x


def node_moments(grid: np.ndarray, values: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """``J_i(s_j)`` at every node for every term; shape ``(T, ..., M+1, m)``."""
    taus = np.asarray(taus, dtype=float)
    T = taus.size
    out = np.empty((T,) + values.shape)
    if T == 0:
        return out
    decay, wa, wb, _ = segment_weights(grid, taus)
    M = grid.size - 1
    extra = values.ndim - 2
    shape = (T,) + (1,) * extra + (1,)
    out[..., M, :] = values[..., M, :][None]
    for j in range(M - 1, -1, -1):
        out[..., j, :] = (
            decay[:, j].reshape(shape) * out[..., j + 1, :]
            + wa[:, j].reshape(shape) * values[..., j, :][None]
            + wb[:, j].reshape(shape) * values[..., j + 1, :][None]
        )
    return out


def moments_at(grid: np.ndarray, values: np.ndarray, taus: np.ndarray, s, J: np.ndarray | None = None):
    """``J_i(s)`` at arbitrary lags ``s``; shape ``(T, ..., len(s), m)``."""
    taus = np.asarray(taus, dtype=float)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if J is None:
        J = node_moments(grid, values, taus)
    M = grid.size - 1
    idx = np.searchsorted(grid, s, side="right") - 1
    tail = idx >= M
    idx_c = np.minimum(idx, M - 1) if M > 0 else np.zeros_like(idx)
    out = np.empty((taus.size,) + values.shape[:-2] + (s.size, values.shape[-1]))
    if M == 0:
        out[...] = values[..., 0:1, :][None]
        return out
    a = grid[idx_c]
    b = grid[idx_c + 1]
    Va = values[..., idx_c, :]
    Vb = values[..., idx_c + 1, :]
    L = b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(L > 0, (s - a) / np.where(L > 0, L, 1.0), 0.0)
    Xs = (1 - lam)[:, None] * Va + lam[:, None] * Vb
    y = np.clip(b - s, 0.0, None)[None, :] / taus[:, None]
    p1, p2, _ = phi123(y)
    extra = values.ndim - 2
    shape = (taus.size,) + (1,) * extra + (s.size, 1)
    Jb = J[..., idx_c + 1, :]
    res = (
        np.exp(-y).reshape(shape) * Jb
        + (y * p2).reshape(shape) * Xs[None]
        + (y * (p1 - p2)).reshape(shape) * Vb[None]
    )
    # past the last node the record is constant
    res[..., tail, :] = values[..., M : M + 1, :][None]
    out[...] = res
    return out


def segment_mean_moments(grid: np.ndarray, values: np.ndarray, taus: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Segment averages ``(1/L) int_a^b J_i(s) ds``; shape ``(T, ..., M, m)``.

    The closed form ``J(b) phi1 + X(b) x phi2 - (X(b) - X(a)) x phi3``
    reduces to ``J(b)`` on zero-length (jump) segments.
    """
    _, _, _, x = segment_weights(grid, taus)
    p1, p2, p3 = phi123(x)
    extra = values.ndim - 2
    T, M = x.shape
    shape = (T,) + (1,) * extra + (M, 1)
    Vb = values[..., 1:, :][None]
    dV = np.diff(values, axis=-2)[None]
    return p1.reshape(shape) * J[..., 1:, :] + (x * p2).reshape(shape) * Vb - (x * p3).reshape(shape) * dV


def exp_poly_means(L: np.ndarray, tau: float, kmax: int = 2) -> np.ndarray:
    """``E_k = L^-(k+1) int_0^L exp(-u/tau) u^k du`` for k = 0..kmax.

    Uses the regularized lower incomplete gamma function away from zero and
    a short series near it; shape ``(kmax+1,) + L.shape``.
    """
    L = np.asarray(L, dtype=float)
    x = L / tau
    out = np.empty((kmax + 1,) + L.shape)
    small = x < 1e-3
    xs = np.where(small, x, 0.0)
    xl = np.where(small, 1.0, x)
    for k in range(kmax + 1):
        series = np.zeros_like(x)
        term = np.ones_like(x)
        for j in range(8):
            if j > 0:
                term = term * (-xs) / j
            series = series + term / (k + j + 1)
        large = _factorial(k) * gammainc(k + 1, xl) / xl ** (k + 1)
        out[k] = np.where(small, series, large)
    return out
