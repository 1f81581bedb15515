"""Segment stresses, work sums and the quadratic form of work in nodal values.

The work of a piecewise-linear history is a quadratic function of its nodal
values because the response is linear in the history.  Rather than deriving
the form symbolically, :func:`work_form` probes the exact segment engine with
scalar hat functions and combines the probes with the kernel matrices.
"""

from __future__ import annotations

import numpy as np

from ._quadrature import node_moments, segment_mean_moments


def mean_segment_stress(grid, values, G0, C, taus, J=None):
    """Average response over each segment; shape ``(..., M, n)``.

    The stress seen from lag ``s`` is ``G(0) X(s) - sum_i C_i J_i(s)``;
    averaging over a segment keeps jumps (zero length) finite.
    """
    avg = 0.5 * (values[..., :-1, :] + values[..., 1:, :])
    out = avg @ G0.T
    if len(taus):
        if J is None:
            J = node_moments(grid, values, taus)
        m = segment_mean_moments(grid, values, taus, J)
        out = out - np.einsum("tij,t...j->...i", C, m)
    return out


def segment_mask(grid, upto=None):
    """Segments lying inside ``[0, upto]`` (all segments when ``upto`` is None)."""
    if upto is None:
        return np.ones(grid.size - 1, dtype=bool)
    return grid[1:] <= upto * (1 + 1e-14) + 1e-14


def work_terms(grid, values, G0, C, taus, upto=None):
    """Per-segment, per-component work ``-(dX) * mean_stress``; shape ``(..., M, n)``.

    Rates are taken in physical time, which runs against the lag, hence the
    minus sign.
    """
    sbar = mean_segment_stress(grid, values, G0, C, taus)
    dV = np.diff(values, axis=-2)
    terms = -dV * sbar
    mask = segment_mask(grid, upto)
    return terms * mask[:, None]


def work_form(grid, base, free, G0, C, taus, upto=None):
    """Quadratic form of work in the values at the ``free`` nodes.

    Parameters
    ----------
    grid : ndarray, shape (M+1,)
    base : ndarray, shape (M+1, n)
        Values at all nodes; the free-node entries define the origin of ``x``.
    free : sequence of int
        Node indices whose values are the unknowns, ordered node-major so
        that ``x[f*n + c]`` perturbs component ``c`` of node ``free[f]``.
    upto : float or None
        Only segments inside ``[0, upto]`` are counted.

    Returns
    -------
    c, g, A
        ``work(base + x) = c + g @ x + 0.5 * x @ A @ x`` with ``A`` symmetric.
    """
    n = base.shape[1]
    free = np.asarray(free, dtype=int)
    F = free.size
    mask = segment_mask(grid, upto).astype(float)

    sbar_base = mean_segment_stress(grid, base, G0, C, taus)
    dV = np.diff(base, axis=0) * mask[:, None]
    c = -float(np.sum(dV * sbar_base))

    U = np.zeros((F, grid.size, 1))
    U[np.arange(F), free, 0] = 1.0
    dU = np.diff(U[..., 0], axis=1) * mask[None, :]  # (F, M)
    avgU = 0.5 * (U[:, :-1, 0] + U[:, 1:, 0])  # (F, M)
    if len(taus):
        JU = node_moments(grid, U, taus)
        mU = segment_mean_moments(grid, U, taus, JU)[..., 0]  # (T, F, M)
    else:
        mU = np.zeros((0, F, grid.size - 1))

    P0 = -dU @ avgU.T
    Hmat = np.kron(P0, G0)
    for i in range(len(taus)):
        Hmat += np.kron(dU @ mU[i].T, C[i])

    g = -(dU @ sbar_base)  # (F, n)
    a0 = avgU @ dV  # (F, n): sum over segments of dV * avg_k
    g -= a0 @ G0
    for i in range(len(taus)):
        g += (mU[i] @ dV) @ C[i]
    A = Hmat + Hmat.T
    return c, g.reshape(-1), A
