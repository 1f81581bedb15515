"""Hereditary response of a linear material with memory.

The dual measures of a history ``H`` are

    Y(H) = G(0) X(0) + int_0^inf G'(s) X(s) ds
         = G(0) X(0) - sum_i C_i J_i(0)

with ``J_i`` the exponential moments of the history.  For piecewise-linear
histories with a constant tail the moments are exact, so the response carries
no quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._quadrature import moments_at, node_moments
from ._validation import as_float_array
from .errors import DomainError, ShapeError
from .history import History, Process, prolong

__all__ = ["StressState", "respond", "respond_after", "respond_surface", "respond_profile"]


@dataclass(frozen=True)
class StressState:
    """Dual measures on a layout: ``(sigma, z, S)`` in the bulk, ``(T, zz, SS)`` on a surface."""

    layout: object
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = as_float_array(self.data, "stress").reshape(-1)
        if data.shape != (self.layout.n,):
            raise ShapeError(f"stress must have {self.layout.n} entries, got {data.size}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def block(self, i: int) -> np.ndarray:
        return self.data[self.layout.blocks[i]].reshape(self.layout.block_shapes[i])

    def __getitem__(self, name: str) -> np.ndarray:
        return self.block(self.layout.dual_names.index(name))

    def components(self) -> list[tuple[str, float]]:
        """``(name, value)`` pairs such as ``("sigma[0,1]", 0.3)``."""
        rows = []
        for i, name in enumerate(self.layout.dual_names):
            blk = self.block(i)
            for idx in np.ndindex(blk.shape):
                rows.append((f"{name}[{','.join(map(str, idx))}]", float(blk[idx])))
        return rows


def _kernel(M):
    return M.kernel


def _check_dim(M, H):
    if H.dim != M.n:
        raise ShapeError(f"history dimension {H.dim} does not match model size {M.n}")


def respond(M, H: History) -> StressState:
    """Dual measures ``Y(H)`` of the history ``H``."""
    _check_dim(M, H)
    K = _kernel(M)
    out = K.G0 @ H.initial
    if K.taus.size:
        J = node_moments(H.grid, H.values, K.taus)
        # the moment is continuous, so node 0 is correct even for a jump at the present
        out = out - np.einsum("tij,tj->i", K.C, J[:, 0, :])
    return StressState(M.layout, out)


def respond_profile(M, H: History, s) -> np.ndarray:
    """Response of the shifted histories ``H^s`` at lags ``s``; shape ``(len(s), n)``."""
    _check_dim(M, H)
    K = _kernel(M)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    out = H(s) @ K.G0.T
    if K.taus.size:
        Js = moments_at(H.grid, H.values, K.taus, s)
        out = out - np.einsum("tij,tsj->si", K.C, Js)
    return out


def respond_after(M, K: Process, H: History, s):
    """Response after the first part of ``K`` has been applied to ``H``.

    At lag ``s`` in ``[0, p)`` this is the response of the shifted
    prolongation ``(K*H)^s``; ``s -> p`` recovers ``respond(M, H)``.  One
    prolongation is built and the moments at every ``s`` come from a single
    backward sweep.
    """
    s_arr = np.asarray(s, dtype=float)
    flat = np.atleast_1d(s_arr)
    if np.any((flat < 0) | (flat >= K.duration)):
        raise DomainError("respond_after requires s in [0, duration)", path="s")
    P = prolong(K, H)
    prof = respond_profile(M, P, flat)
    if s_arr.ndim == 0:
        return StressState(M.layout, prof[0])
    return prof


def respond_surface(SM, HH: History) -> StressState:
    """Surface measures ``(T, zz, SS)`` of a surface history."""
    if not getattr(SM.layout, "surface", False):
        raise ShapeError("respond_surface needs a model on the surface layout")
    return respond(SM, HH)
