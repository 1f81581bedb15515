"""Input validation helpers shared by the public functions."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ShapeError


def as_float_array(x, name: str = "array", ndim: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}", path=name)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries", path=name)
    return arr


def check_vector(x, n: int, name: str = "vector") -> np.ndarray:
    arr = as_float_array(x, name).reshape(-1) if np.ndim(x) == 1 else as_float_array(x, name)
    if arr.shape != (n,):
        raise ShapeError(f"{name} must have shape ({n},), got {arr.shape}", path=name)
    return arr


def check_square(x, n: int, name: str = "matrix") -> np.ndarray:
    arr = as_float_array(x, name)
    if arr.ndim == 1 and arr.size == n * n:
        arr = arr.reshape(n, n)
    if arr.shape != (n, n):
        raise ShapeError(f"{name} must have shape ({n}, {n}), got {arr.shape}", path=name)
    return arr


def check_nonnegative(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be a finite number >= 0, got {value}", path=name)
    return value


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a finite number > 0, got {value}", path=name)
    return value


def check_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
