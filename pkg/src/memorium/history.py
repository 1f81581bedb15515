"""Histories, processes and the operations that graft one onto the other.

A :class:`History` is a right-continuous, piecewise-linear record
``s -> X(s)`` over the lag ``s >= 0`` (``s = 0`` is the present, larger ``s``
is further in the past), held constant beyond its last node so that
``H(inf)`` is the last nodal value.  Two consecutive nodes may share the same
lag to encode a jump; by right-continuity the history takes the value of the
older (second) node there.  Jumps only arise from relative continuations.

A :class:`Process` is a finite-duration record on ``[0, p)`` together with
its left limit at ``p``.  Prolonging a history ``H`` by a process ``K``
places ``K`` on the recent side: ``(K*H)(s) = K(s)`` for ``s < p`` and
``H(s - p)`` beyond.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_array, check_nonnegative, check_positive
from .errors import ContinuityError, DomainError, ShapeError

__all__ = [
    "History",
    "Process",
    "prolong",
    "prolong_relative",
    "constant_history",
    "shift",
    "restrict",
    "concat",
    "lemma_process",
    "varied_history",
    "bump",
    "TOL_CONT",
    "MERGE_TOL",
]

TOL_CONT = 1e-12
MERGE_TOL = 1e-14


def _check_nodes(grid: np.ndarray, values: np.ndarray, what: str) -> None:
    if grid.ndim != 1 or grid.size == 0:
        raise ShapeError(f"{what} grid must be a non-empty 1-d array", path=f"{what}.grid")
    if values.ndim != 2 or values.shape[0] != grid.size:
        raise ShapeError(
            f"{what} values must have shape ({grid.size}, d), got {values.shape}", path=f"{what}.values"
        )
    if grid[0] != 0.0:
        raise DomainError(f"{what} grid must start at 0, got {grid[0]}", path=f"{what}.grid")
    steps = np.diff(grid)
    if np.any(steps < 0):
        raise DomainError(f"{what} grid must be non-decreasing", path=f"{what}.grid")
    # a zero step encodes a jump; three equal lags in a row carry no meaning
    zero = steps == 0
    if np.any(zero[1:] & zero[:-1]):
        raise DomainError(f"{what} grid repeats a lag more than twice", path=f"{what}.grid")


@dataclass(frozen=True)
class History:
    """Piecewise-linear history with a constant tail.

    Parameters
    ----------
    grid : array_like, shape (M+1,)
        Lags ``0 = s_0 <= s_1 <= ... <= s_M``; a repeated lag is a jump.
    values : array_like, shape (M+1, d)
        Nodal states.
    """

    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        grid = as_float_array(self.grid, "history.grid").reshape(-1)
        values = as_float_array(self.values, "history.values")
        if values.ndim == 1:
            values = values.reshape(grid.size, -1)
        _check_nodes(grid, values, "history")
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __repr__(self) -> str:
        return f"History(nodes={self.grid.size}, dim={self.dim}, span={self.span:g})"

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def span(self) -> float:
        """Lag of the last node; the history is constant beyond it."""
        return float(self.grid[-1])

    @property
    def initial(self) -> np.ndarray:
        """``H(0)``; the older value if the history jumps at the present."""
        return self(0.0)

    @property
    def final(self) -> np.ndarray:
        """``H(inf)``."""
        return self.values[-1]

    @property
    def has_jumps(self) -> bool:
        return bool(np.any(np.diff(self.grid) == 0))

    def __call__(self, s):
        """Evaluate at lag(s) ``s``; returns shape ``(d,)`` or ``(len(s), d)``."""
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0):
            raise DomainError("histories are defined for lags s >= 0", path="s")
        flat = np.atleast_1d(s_arr)
        out = _interp_right(self.grid, self.values, flat)
        return out[0] if s_arr.ndim == 0 else out

    def left_limit(self, s: float) -> np.ndarray:
        """``lim_{u -> s-} H(u)``, the value approached from the recent side."""
        s = float(s)
        if s <= 0:
            return self.initial
        i = int(np.searchsorted(self.grid, s, side="left"))
        if i >= self.grid.size:
            return self.values[-1].copy()
        # node i is the first with lag >= s; the segment [i-1, i] reaches it from below
        a, b = self.grid[i - 1], self.grid[i]
        lam = (s - a) / (b - a)
        return (1 - lam) * self.values[i - 1] + lam * self.values[i]

    def rate(self, s: float) -> np.ndarray:
        """Central lag derivative: mean of the one-sided slopes at ``s``."""
        s = float(s)
        slopes = np.diff(self.values, axis=0)
        steps = np.diff(self.grid)
        with np.errstate(divide="ignore", invalid="ignore"):
            seg = np.where(steps[:, None] > 0, slopes / steps[:, None], 0.0)

        def slope_on(i):
            return seg[i] if 0 <= i < seg.shape[0] else np.zeros(self.dim)

        right = int(np.searchsorted(self.grid, s, side="right")) - 1  # segment starting at or before s
        left = int(np.searchsorted(self.grid, s, side="left")) - 1  # segment ending at or after s
        if s > 0 and np.any(np.isclose(self.grid, s, rtol=0, atol=MERGE_TOL)):
            return 0.5 * (slope_on(left) + slope_on(right))
        return slope_on(right)

    def to_dict(self) -> dict:
        return {"grid": self.grid.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, spec: dict, dim: int | None = None) -> "History":
        if "constant" in spec:
            return constant_history(spec["constant"])
        grid = np.asarray(spec["grid"], dtype=float)
        values = np.asarray(spec["values"], dtype=float)
        if values.ndim == 1 and dim is not None:
            values = values.reshape(grid.size, dim)
        return cls(grid, values)


def _interp_right(grid: np.ndarray, values: np.ndarray, s: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(grid, s, side="right") - 1
    out = np.empty((s.size, values.shape[1]))
    tail = idx >= grid.size - 1
    out[tail] = values[-1]
    inner = ~tail
    if np.any(inner):
        i = idx[inner]
        a, b = grid[i], grid[i + 1]
        lam = ((s[inner] - a) / (b - a))[:, None]
        out[inner] = (1 - lam) * values[i] + lam * values[i + 1]
    return out


@dataclass(frozen=True)
class Process:
    """Finite record on ``[0, p)`` with its left limit ``K(p)^-``.

    Between the last node and ``p`` the process runs linearly to
    ``terminal`` (the left limit), so nodes plus terminal form a
    piecewise-linear path.
    """

    duration: float
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    terminal: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = check_positive(self.duration, "process.duration")
        grid = as_float_array(self.grid, "process.grid").reshape(-1)
        values = as_float_array(self.values, "process.values")
        if values.ndim == 1:
            values = values.reshape(grid.size, -1)
        terminal = as_float_array(self.terminal, "process.terminal").reshape(-1)
        _check_nodes(grid, values, "process")
        if grid[-1] >= p:
            raise DomainError("process grid must lie in [0, duration)", path="process.grid")
        if terminal.shape != (values.shape[1],):
            raise ShapeError("process terminal value has wrong dimension", path="process.terminal")
        for arr in (grid, values, terminal):
            arr.setflags(write=False)
        object.__setattr__(self, "duration", p)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "terminal", terminal)

    def __repr__(self) -> str:
        return f"Process(duration={self.duration:g}, nodes={self.grid.size}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Grid and values including the terminal node at ``p``."""
        return np.append(self.grid, self.duration), np.vstack([self.values, self.terminal])

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        flat = np.atleast_1d(s_arr)
        if np.any((flat < 0) | (flat >= self.duration)):
            raise DomainError("process is defined on [0, duration)", path="s")
        g, v = self.nodes
        out = _interp_right(g, v, flat)
        return out[0] if s_arr.ndim == 0 else out

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "terminal": self.terminal.tolist(),
        }

    @classmethod
    def from_dict(cls, spec: dict) -> "Process":
        values = np.asarray(spec["values"], dtype=float)
        if "terminal" in spec:
            terminal = spec["terminal"]
        else:
            terminal = values[-1]
        return cls(spec["duration"], spec["grid"], values, terminal)

    @classmethod
    def from_nodes(cls, grid, values) -> "Process":
        """Build from nodes on ``[0, p]``; the last node is the left limit at ``p``."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls(grid[-1], grid[:-1], values[:-1], values[-1])


def _merge(grid: np.ndarray, values: np.ndarray, keep_jumps: bool) -> tuple[np.ndarray, np.ndarray]:
    """Drop nodes that duplicate their predecessor within MERGE_TOL.

    With ``keep_jumps`` a near-duplicate lag carrying a different value is
    kept as a jump (its lag snapped onto the predecessor's).
    """
    keep = np.ones(grid.size, dtype=bool)
    grid = grid.copy()
    for i in range(1, grid.size):
        if grid[i] - grid[i - 1] < MERGE_TOL:
            same = np.allclose(values[i], values[i - 1], rtol=0, atol=0)
            if same or not keep_jumps:
                keep[i - 1 if not same else i] = False
            else:
                grid[i] = grid[i - 1]
    return grid[keep], values[keep]


def prolong(K: Process, H: History, tol_cont: float = TOL_CONT) -> History:
    """The history ``K*H``: ``K`` on ``[0, p)`` then ``H`` shifted by ``p``.

    Raises
    ------
    ContinuityError
        If ``|K(p)^- - H(0)| > tol_cont`` (max norm).
    """
    if K.dim != H.dim:
        raise ShapeError(f"process dimension {K.dim} != history dimension {H.dim}")
    gap = float(np.max(np.abs(K.terminal - H.initial)))
    if gap > tol_cont:
        raise ContinuityError(gap, tol_cont)
    grid = np.concatenate([K.grid, K.duration + H.grid])
    values = np.vstack([K.values, H.values])
    grid, values = _merge(grid, values, keep_jumps=False)
    return History(grid, values)


def prolong_relative(K: Process, H: History) -> History:
    """Relative continuation: ``K(s) + H(0)`` for ``s < p``, then ``H(s - p)``.

    No compatibility is required; when ``K(p)^-`` is nonzero the result
    jumps at ``p`` and the jump is stored as a repeated lag.
    """
    if K.dim != H.dim:
        raise ShapeError(f"process dimension {K.dim} != history dimension {H.dim}")
    h0 = H.initial
    g, v = K.nodes
    head_grid, head_values = g, v + h0
    grid = np.concatenate([head_grid, K.duration + H.grid])
    values = np.vstack([head_values, H.values])
    grid, values = _merge(grid, values, keep_jumps=True)
    return History(grid, values)


def constant_history(X) -> History:
    """The constant history ``X^dagger``."""
    X = as_float_array(X, "constant").reshape(-1)
    return History(np.zeros(1), X[None, :])


def shift(H: History, t: float) -> History:
    """``H^t(s) = H(t + s)``: the history as it stood ``t`` lag units ago."""
    t = check_nonnegative(t, "t")
    if t == 0:
        return H
    older = H.grid > t + MERGE_TOL
    grid = np.concatenate([[0.0], H.grid[older] - t])
    values = np.vstack([H(t)[None, :], H.values[older]])
    grid, values = _merge(grid, values, keep_jumps=True)
    return History(grid, values)


def restrict(H: History, p: float) -> Process:
    """The process ``H_p`` generated by ``H`` over ``[0, p)``."""
    p = check_positive(p, "p")
    inside = H.grid < p - MERGE_TOL
    return Process(p, H.grid[inside], H.values[inside], H.left_limit(p))


def concat(K_recent: Process, K_old: Process, tol_cont: float = TOL_CONT) -> Process:
    """The process ``K_recent * K_old`` of duration ``p_recent + p_old``."""
    gap = float(np.max(np.abs(K_recent.terminal - K_old.values[0])))
    if gap > tol_cont:
        raise ContinuityError(gap, tol_cont)
    grid = np.concatenate([K_recent.grid, K_recent.duration + K_old.grid])
    values = np.vstack([K_recent.values, K_old.values])
    grid, values = _merge(grid, values, keep_jumps=False)
    return Process(K_recent.duration + K_old.duration, grid, values, K_old.terminal)


def lemma_process(H: History, Hp: History, p: float) -> Process:
    """Linear bridge of duration ``p`` from ``H(p)`` (recent end) to ``Hp(0)``.

    ``H_p * L_p * Hp`` then replays ``H`` over ``[0, p)``, ramps for another
    ``p`` and ends on ``Hp``.
    """
    p = check_positive(p, "p")
    return Process(p, np.zeros(1), H(p)[None, :], Hp.initial)


def bump(x):
    """``x (1 - x^2)^3`` on ``|x| < 1``, zero elsewhere: C^2, f(0)=0, f'(0)=1."""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 1, x * (1 - x * x) ** 3, 0.0)


def varied_history(H: History, t: float, alpha: float, rate_target, resolution: int = 64) -> History:
    """Perturb ``H`` near lag ``t`` so that its lag rate there becomes ``rate_target``.

    ``H_a(s) = H(s) + a f((s - t)/a) (rate_target - H'(t))`` with ``f`` the
    :func:`bump`.  The window ``[t - a, t + a]`` is resolved with
    ``resolution`` uniform intervals (``t`` itself is a node).
    """
    t = check_nonnegative(t, "t")
    alpha = check_positive(alpha, "alpha")
    target = as_float_array(rate_target, "rate_target").reshape(-1)
    if target.size != H.dim:
        raise ShapeError("rate_target has wrong dimension")
    if t - alpha < 0 or t + alpha > H.span:
        raise DomainError(f"window [{t - alpha:g}, {t + alpha:g}] escapes the history span [0, {H.span:g}]")
    resolution = max(2, int(resolution) + int(resolution) % 2)
    delta = target - H.rate(t)
    window = np.linspace(t - alpha, t + alpha, resolution + 1)
    outside = (H.grid < t - alpha - MERGE_TOL) | (H.grid > t + alpha + MERGE_TOL)
    grid = np.union1d(H.grid[outside], window)
    values = H(grid) + alpha * bump((grid - t) / alpha)[:, None] * delta[None, :]
    return History(grid, values)
