"""Relaxed work: the least work needed to drive one history into another.

The infimum runs over processes ``K`` applied to the source ``H'`` whose
prolongations approach the target ``H`` in the history distance.  The
candidate processes here are a free piecewise-linear segment of duration
``q`` leaving the source, followed by a replay of the target over its most
recent ``D`` lag units.  The replay makes the prolongation approach the
target as ``D`` grows; the free nodes are chosen optimally.  Work is a
quadratic function of the free nodal values, so each candidate family is
solved exactly by an eigen-decomposition; ``D`` and ``q`` are then grown
geometrically until the optimum settles.

Every value reported is the work of an explicit process, so it bounds the
infimum from above.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._forms import work_form
from .errors import BudgetExceeded, DomainError, ShapeError, UnboundedBelow
from .history import History, Process, constant_history, prolong, restrict, shift
from .metric import distance
from .work import retardation_gap, work, work_over

__all__ = [
    "RelaxationProblem",
    "RelaxedWorkResult",
    "BoundCheck",
    "relaxed_work",
    "max_recoverable",
    "min_work",
    "check_relaxed_bounds",
    "free_segment_lags",
]


@dataclass(frozen=True)
class RelaxationProblem:
    """Relaxed work from ``source`` to ``target`` under ``model``.

    Parameters
    ----------
    free_nodes : int
        Minimum nodes per end of the free segment.  The nodes cluster
        geometrically towards both ends, and more are added as the segment
        grows so that neighbouring steps stay within a factor of two.
    replay_depth : float or None
        Initial replay depth ``D``; defaults to ``4 * tau_max``.
    free_duration : float or None
        Initial free-segment duration ``q``; defaults to ``10 * tau_max``.
    growth : float
        Factor applied to ``D`` and ``q`` between levels.
    tol_rw : float
        Stop when two consecutive levels differ by less than
        ``tol_rw * max(1, |value|)``.
    max_levels : int
        Level budget.
    tol_psd : float
        Relative eigenvalue threshold below which the quadratic form is
        declared indefinite.
    """

    model: object
    source: History
    target: History
    free_nodes: int = 6
    replay_depth: float | None = None
    free_duration: float | None = None
    growth: float = 4.0
    tol_rw: float = 1e-7
    max_levels: int = 30
    tol_psd: float = 1e-9
    allow_indefinite: bool = False

    def __post_init__(self):
        if int(self.free_nodes) < 1:
            raise DomainError("free_nodes must be >= 1", path="relax.free_nodes")
        if self.replay_depth is not None and self.replay_depth < 0:
            raise DomainError("replay_depth must be >= 0", path="relax.replay_depth")
        if self.growth <= 1:
            raise DomainError("growth must be > 1", path="relax.growth")
        n = self.model.n
        if self.source.dim != n or self.target.dim != n:
            raise ShapeError("source and target must match the model layout")


@dataclass(frozen=True)
class RelaxedWorkResult:
    """Outcome of :func:`relaxed_work`.

    ``value`` is the work of ``process`` applied to the source, an upper
    bound on the relaxed work; ``residual`` is the distance between the
    prolonged source and the target.
    """

    value: float
    process: Process | None
    residual: float
    trace: list = field(default_factory=list)
    singular: bool = False
    converged: bool = True

    def __float__(self) -> float:
        return self.value


def free_segment_lags(q: float, per_end: int, first: float, max_ratio: float = 2.0) -> np.ndarray:
    """Interior lags of the free segment: two geometric ladders meeting at ``q/2``.

    Each ladder has at least ``per_end`` rungs and more when needed to keep
    consecutive steps within ``max_ratio`` of each other; without the cap
    the ladder coarsens as ``q`` grows and the levels stop settling.
    """
    half = 0.5 * q
    first = min(first, half / (per_end + 1))
    per_end = max(per_end, int(np.ceil(np.log(half / first) / np.log(max_ratio))))
    ratio = (half / first) ** (1.0 / per_end)
    left = first * ratio ** np.arange(per_end)
    return np.concatenate([left, [half], (q - left)[::-1]])


def _solve(c: float, g: np.ndarray, A: np.ndarray, tol_psd: float, allow_indefinite: bool):
    lam, vec = np.linalg.eigh(A)
    top = max(float(np.abs(lam).max()), 1e-300)
    if lam[0] < -tol_psd * top and not allow_indefinite:
        raise UnboundedBelow(float(lam[0]))
    keep = lam > 1e-13 * top
    coef = vec.T @ g
    x = -vec[:, keep] @ (coef[keep] / lam[keep])
    value = c + g @ x + 0.5 * x @ A @ x
    return x, float(value), bool(np.any(~keep))


def _candidate(Ht: History, Hs: History, D: float, q: float, lags: np.ndarray):
    """Nodes of ``K*H'`` for the replay-then-free family, with free node indices.

    The free segment may jump at both of its ends (repeated lags): jumps are
    limits of ever steeper ramps, so the infimum is unchanged, and without
    them the first ladder step would bias every level by a fixed amount.
    """
    start, end = Ht(D) if D > 0 else Ht.initial, Hs.initial
    recent = Ht.grid < D
    lam = np.concatenate([[0.0], lags / q, [1.0]])
    guess = (1 - lam)[:, None] * start + lam[:, None] * end
    head_grid = np.append(Ht.grid[recent], D) if D > 0 else np.zeros(0)
    head_vals = np.vstack([Ht.values[recent], start]) if D > 0 else np.zeros((0, start.size))
    grid = np.concatenate([head_grid, D + q * lam, D + q + Hs.grid])
    values = np.vstack([head_vals, guess, Hs.values])
    free = head_grid.size + np.arange(lam.size)
    if D == 0:
        # the present value is pinned to the target's
        free = free[1:]
    return grid, values, free


def _ramped(grid: np.ndarray, values: np.ndarray, D: float, q: float, width: float) -> History:
    # replace the two end jumps by ramps of the given width so the result is
    # an ordinary compatible process
    g = grid.copy()
    jumps = np.flatnonzero(np.diff(g) == 0)
    for j in jumps:
        if abs(g[j] - D) <= 1e-12 * max(1.0, D):
            g[j + 1] = g[j] + width
        elif abs(g[j] - (D + q)) <= 1e-12 * max(1.0, D + q):
            g[j] = g[j] - width
    return History(g, values)


def _level(P: RelaxationProblem, D: float, q: float):
    M, Hs, Ht = P.model, P.source, P.target
    Kn = M.kernel
    n = M.n
    lags = free_segment_lags(q, int(P.free_nodes), 0.25 * Kn.tau_min)
    grid, base, free = _candidate(Ht, Hs, D, q, lags)
    c, g, A = work_form(grid, base, free, Kn.G0, Kn.C, Kn.taus, upto=D + q)
    x, value, singular = _solve(c, g, A, P.tol_psd, P.allow_indefinite)
    vals = base.copy()
    vals[free] += x.reshape(-1, n)
    best = History(grid, vals)
    # the ramp must stay resolvable next to lags of size D + q
    width = max(1e-9 * Kn.tau_min, 64 * np.finfo(float).eps * (D + q))
    Kbest = restrict(_ramped(grid, vals, D, q, width), D + q)
    return value, Kbest, best, singular


def _direct_candidate(M, source: History, target: History, tol: float = 1e-12):
    """The target's own head as a process, when the target prolongs the source.

    If ``target`` shifted by some lag ``p`` is indistinguishable from
    ``source``, restricting the target to ``[0, p)`` reaches it exactly; the
    optimizer family cannot express this (its free segment always returns
    to the source's present).  ``p = 0`` gives the empty process.
    """
    lags = np.unique(np.concatenate([[0.0], target.grid]))
    for p in lags:
        if np.max(np.abs(target(p) - source.initial)) > tol:
            continue
        d = distance(M, shift(target, p), source).upper if p > 0 else distance(M, target, source).upper
        if d > tol:
            continue
        if p == 0:
            return RelaxedWorkResult(0.0, None, d, [(0, 0.0, 0.0, 0.0, d)])
        K = restrict(target, p)
        return RelaxedWorkResult(work_over(M, K, source, check=False).value, K, d, [])
    return None


def relaxed_work(P: RelaxationProblem) -> RelaxedWorkResult:
    """Upper-bound the relaxed work from ``P.source`` to ``P.target``.

    Raises
    ------
    UnboundedBelow
        If the work form of a candidate family is indefinite, which cannot
        happen for a dissipative kernel.
    BudgetExceeded
        If the values have not settled within ``P.max_levels`` levels; the
        exception carries the trace.
    """
    M = P.model
    Kn = M.kernel
    D = float(P.replay_depth) if P.replay_depth is not None else 4.0 * Kn.tau_max
    q = float(P.free_duration) if P.free_duration is not None else 10.0 * Kn.tau_max

    direct = _direct_candidate(M, P.source, P.target)
    if direct is not None and direct.process is None:
        return direct

    trace = []
    prev = None
    singular_any = False
    first = 0.25 * Kn.tau_min
    for level in range(int(P.max_levels)):
        if (D + q) * np.finfo(float).eps > 1e-4 * first:
            # lags this large no longer resolve the finest ladder step
            raise BudgetExceeded("relaxed work levels outgrew floating-point resolution", trace=trace)
        value, K, hist, singular = _level(P, D, q)
        singular_any |= singular
        resid = distance(M, hist, P.target).upper
        trace.append((level, D, q, value, resid))
        if prev is not None and abs(value - prev) < P.tol_rw * max(1.0, abs(value)):
            if direct is not None and direct.value < value:
                return RelaxedWorkResult(direct.value, direct.process, direct.residual, trace, singular_any, True)
            return RelaxedWorkResult(value, K, resid, trace, singular_any, True)
        prev = value
        D *= P.growth
        q *= P.growth
    raise BudgetExceeded(f"relaxed work did not settle within {P.max_levels} levels", trace=trace)


def max_recoverable(P: RelaxationProblem) -> float:
    """Largest work recoverable on the way from source to target: ``-relaxed_work``."""
    return -relaxed_work(P).value


def min_work(P: RelaxationProblem) -> float:
    """Least work needed from source to target, i.e. the relaxed work itself."""
    return relaxed_work(P).value


@dataclass(frozen=True)
class BoundCheck:
    """One inequality ``lhs <= rhs`` evaluated with optimizer values.

    Optimizer values over-estimate infima, so a check is ``certified`` when
    every over-estimated term sits on the side where over-estimation can
    only make the inequality harder to satisfy.  Uncertified checks are
    passed with ``slack`` derived from the observed convergence.
    """

    name: str
    lhs: float
    rhs: float
    slack: float
    certified: bool

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.slack


def _slack(result: RelaxedWorkResult) -> float:
    tr = result.trace
    last = abs(tr[-1][3] - tr[-2][3]) if len(tr) >= 2 else 0.0
    return 10 * last + 1e-9


class _Cache:
    def __init__(self, model, **options):
        self.model = model
        self.options = options
        self.store = {}

    def __call__(self, source: History, target: History) -> RelaxedWorkResult:
        key = (id(source), id(target))
        if key not in self.store:
            self.store[key] = relaxed_work(RelaxationProblem(self.model, source, target, **self.options))
        return self.store[key]


def check_relaxed_bounds(M, H: History, H2: History, H3: History | None = None, **options) -> list[BoundCheck]:
    """Evaluate the inequalities relating relaxed works among ``H``, ``H2``, ``H3``.

    ``H3`` defaults to the zero constant history.  Returned checks:
    sub-additivity, the retardation upper bound, the prolongation bound,
    the reverse-pair bound and domination by the zero source.
    """
    zero = constant_history(np.zeros(M.n))
    H3 = zero if H3 is None else H3
    rw = _Cache(M, **options)
    checks = []

    def s(*rs):
        return sum(_slack(r) for r in rs)

    # w^r_{H3}(H) <= w^r_{H3}(H2) + w^r_{H2}(H); lhs over-estimated, so not certified
    a, b, c = rw(H3, H), rw(H3, H2), rw(H2, H)
    checks.append(BoundCheck("sub_additivity", a.value, b.value + c.value, s(a, b, c), False))

    # w^r_{H2}(H) <= w(H) + gap; only the lhs is estimated, from above: not certified
    d = rw(H2, H)
    rhs = work(M, H).value + retardation_gap(M, H, H2)
    checks.append(BoundCheck("retardation_upper", d.value, rhs, s(d), False))

    # w^r_H(K*H) <= w(K, H) for the constant hold K at H(0)
    p = 4.0 * M.kernel.tau_max
    x0 = H.initial
    hold = Process(p, np.zeros(1), x0[None, :], x0)
    KH = prolong(hold, H)
    e = rw(H, KH)
    checks.append(BoundCheck("prolongation", e.value, 0.0, s(e), False))

    # -w^r_H(H2) <= w^r_{H2}(H): both terms estimated from above, lhs enters negated
    f, g = rw(H, H2), rw(H2, H)
    checks.append(BoundCheck("reverse_pair", -f.value, g.value, s(f, g), False))

    # w^r_{H2}(H) <= w^r_{0}(H)
    h, k = rw(H2, H), rw(zero, H)
    checks.append(BoundCheck("zero_source_domination", h.value, k.value, s(h, k), False))
    return checks
