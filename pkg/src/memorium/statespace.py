"""Flattened instantaneous state and its block layout.

The state of a complex body at a point is the triple ``(W, nu, N)`` with
``W`` the 3x3 displacement gradient, ``nu`` the k-dimensional descriptor and
``N`` its k x 3 spatial gradient.  Everything downstream works on the
row-major flattening ``X = (W, nu, N)`` of length ``n = 9 + 4k``.  The dual
measures (stress ``sigma``, self-action ``z``, microstress ``S``) live on the
same layout, block by block.

A :class:`FlatLayout` of arbitrary size with a single block is provided for
scalar toy models and for components that carry no block structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_array
from .errors import DomainError, ShapeError

__all__ = [
    "BlockLayout",
    "FlatLayout",
    "StateVector",
    "pack",
    "unpack",
    "sym_part",
    "inner",
    "layout_from_dict",
]

BULK_STATE_NAMES = ("W", "nu", "N")
BULK_DUAL_NAMES = ("sigma", "z", "S")
SURFACE_STATE_NAMES = ("WW", "nu", "NN")
SURFACE_DUAL_NAMES = ("T", "zz", "SS")


@dataclass(frozen=True)
class BlockLayout:
    """Offsets of the W, nu and N blocks in the flattened state.

    Parameters
    ----------
    k : int
        Dimension of the linear space embedding the descriptor manifold.
    surface : bool
        Only changes the block names (``WW, nu, NN`` / ``T, zz, SS``); the
        surface state has the same shape as the bulk state.
    """

    k: int
    surface: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"descriptor dimension k must be an integer >= 1, got {self.k}", path="layout.k")
        object.__setattr__(self, "k", int(self.k))

    @property
    def n(self) -> int:
        return 9 + 4 * self.k

    @property
    def W(self) -> slice:
        return slice(0, 9)

    @property
    def nu(self) -> slice:
        return slice(9, 9 + self.k)

    @property
    def N(self) -> slice:
        return slice(9 + self.k, 9 + 4 * self.k)

    @property
    def state_names(self) -> tuple[str, ...]:
        return SURFACE_STATE_NAMES if self.surface else BULK_STATE_NAMES

    @property
    def dual_names(self) -> tuple[str, ...]:
        return SURFACE_DUAL_NAMES if self.surface else BULK_DUAL_NAMES

    @property
    def blocks(self) -> tuple[slice, slice, slice]:
        return (self.W, self.nu, self.N)

    @property
    def block_shapes(self) -> tuple[tuple[int, ...], ...]:
        return ((3, 3), (self.k,), (self.k, 3))

    def to_dict(self) -> dict:
        return {"k": self.k, "surface": self.surface}


@dataclass(frozen=True)
class FlatLayout:
    """Unstructured layout: one block of ``n`` components."""

    n: int
    surface: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"layout size n must be an integer >= 1, got {self.n}", path="layout.n")
        object.__setattr__(self, "n", int(self.n))

    @property
    def blocks(self) -> tuple[slice]:
        return (slice(0, self.n),)

    @property
    def block_shapes(self) -> tuple[tuple[int, ...]]:
        return ((self.n,),)

    @property
    def state_names(self) -> tuple[str]:
        return ("X",)

    @property
    def dual_names(self) -> tuple[str]:
        return ("Y",)

    def to_dict(self) -> dict:
        return {"n": self.n, "surface": self.surface}


Layout = BlockLayout | FlatLayout


def layout_from_dict(spec: dict) -> Layout:
    if "k" in spec:
        return BlockLayout(spec["k"], bool(spec.get("surface", False)))
    if "n" in spec:
        return FlatLayout(spec["n"], bool(spec.get("surface", False)))
    raise ShapeError("layout needs either 'k' (block layout) or 'n' (flat layout)", path="layout")


@dataclass(frozen=True)
class StateVector:
    """A flattened state ``X`` tied to its layout."""

    layout: Layout
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = as_float_array(self.data, "state").reshape(-1)
        if data.shape != (self.layout.n,):
            raise ShapeError(f"state must have {self.layout.n} entries, got {data.size}", path="state")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.data, dtype=dtype)

    def __len__(self) -> int:
        return self.layout.n

    def block(self, i: int) -> np.ndarray:
        return self.data[self.layout.blocks[i]].reshape(self.layout.block_shapes[i])

    def __add__(self, other):
        return StateVector(self.layout, self.data + np.asarray(other))

    def __sub__(self, other):
        return StateVector(self.layout, self.data - np.asarray(other))

    def __mul__(self, scalar):
        return StateVector(self.layout, self.data * float(scalar))

    __rmul__ = __mul__


def pack(W, nu, N, layout: BlockLayout | None = None) -> StateVector:
    """Flatten ``(W, nu, N)`` row-major into a :class:`StateVector`.

    The descriptor dimension is inferred from ``nu`` when no layout is given.
    """
    W = as_float_array(W, "W")
    nu = as_float_array(nu, "nu").reshape(-1)
    N = as_float_array(N, "N")
    if layout is None:
        layout = BlockLayout(nu.size)
    k = layout.k
    if W.shape != (3, 3):
        raise ShapeError(f"W must be 3x3, got {W.shape}", path="W")
    if nu.shape != (k,):
        raise ShapeError(f"nu must have {k} entries, got {nu.size}", path="nu")
    if N.shape != (k, 3):
        raise ShapeError(f"N must be {k}x3, got {N.shape}", path="N")
    return StateVector(layout, np.concatenate([W.reshape(-1), nu, N.reshape(-1)]))


def unpack(X: StateVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`pack`; returns copies of ``(W, nu, N)``."""
    if not isinstance(X.layout, BlockLayout):
        raise ShapeError("unpack requires a block layout", path="layout")
    return tuple(np.array(X.block(i)) for i in range(3))


def sym_part(X: StateVector) -> np.ndarray:
    """Infinitesimal strain ``sym W = (W + W^T)/2`` of the W block."""
    W = X.block(0)
    return 0.5 * (W + W.T)


def inner(X, Y) -> float:
    """Euclidean inner product of two flattened states."""
    return float(np.dot(np.asarray(X, dtype=float).reshape(-1), np.asarray(Y, dtype=float).reshape(-1)))
