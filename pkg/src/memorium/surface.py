"""Planar discontinuity surfaces: normal, projector, jumps and averages."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_array
from .errors import DomainError, ShapeError
from .statespace import BlockLayout, StateVector

__all__ = ["SurfaceFrame", "jump", "average", "jump_average_residual", "jump_average_algebra", "surface_state"]

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class SurfaceFrame:
    """Unit normal ``m`` of a planar surface and its projector ``I - m m``."""

    m: np.ndarray = field()

    def __post_init__(self):
        m = as_float_array(self.m, "normal").reshape(-1)
        if m.shape != (3,):
            raise ShapeError("surface normal must have 3 components", path="normal")
        if abs(np.linalg.norm(m) - 1.0) > UNIT_TOL:
            raise DomainError(f"surface normal must be a unit vector, |m| = {np.linalg.norm(m):.15g}", path="normal")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def projector(self) -> np.ndarray:
        return np.eye(3) - np.outer(self.m, self.m)

    @classmethod
    def from_vector(cls, v) -> "SurfaceFrame":
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))


def jump(a_plus, a_minus):
    """``[a] = a+ - a-``."""
    return np.asarray(a_plus) - np.asarray(a_minus)


def average(a_plus, a_minus):
    """``<a> = (a+ + a-)/2``."""
    return 0.5 * (np.asarray(a_plus) + np.asarray(a_minus))


def jump_average_residual(a1_plus, a1_minus, a2_plus, a2_minus, product=np.matmul) -> np.ndarray:
    """Residual of ``[a1 a2] = [a1]<a2> + <a1>[a2]`` for a bilinear ``product``."""
    lhs = jump(product(a1_plus, a2_plus), product(a1_minus, a2_minus))
    rhs = product(jump(a1_plus, a1_minus), average(a2_plus, a2_minus)) + product(
        average(a1_plus, a1_minus), jump(a2_plus, a2_minus)
    )
    return np.asarray(lhs - rhs)


def surface_state(X_plus: StateVector, X_minus: StateVector, frame: SurfaceFrame) -> StateVector:
    """Surface state ``(<W> P, <nu>, <N> P)`` from the bulk traces on both sides."""
    layout = X_plus.layout
    if not isinstance(layout, BlockLayout):
        raise ShapeError("surface_state requires a block layout")
    P = frame.projector
    W = average(X_plus.block(0), X_minus.block(0)) @ P
    nu = average(X_plus.block(1), X_minus.block(1))
    N = average(X_plus.block(2), X_minus.block(2)) @ P
    surf = BlockLayout(layout.k, surface=True)
    return StateVector(surf, np.concatenate([W.reshape(-1), nu, N.reshape(-1)]))


# name used by the scenario and balance tooling
jump_average_algebra = jump_average_residual
