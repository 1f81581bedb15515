"""Distance between histories as seen by a fading-memory kernel.

Two histories are compared through the part of the response they can still
influence after any further elapsed time ``t``::

    f(t) = sum_A | int_0^inf G'_A(s + t) (X(s) - X'(s)) ds |

where ``A`` runs over the dual blocks and ``|.|`` is the Euclidean
(Frobenius) norm of the block.  For Prony kernels
``f(t) = sum_A | sum_i exp(-t/tau_i) a_i[A] |`` with
``a_i = C_i (J_i - J'_i)``, so the supremum over ``t > 0`` is bracketed by
sampling ``t`` on a log grid and adding a Lipschitz and tail correction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._quadrature import node_moments
from .errors import DomainError, PreconditionError, ShapeError
from .history import History, Process, concat, lemma_process, prolong, restrict
from .kernels import block_tail_bound

__all__ = [
    "MetricConfig",
    "DistanceResult",
    "ContractionReport",
    "FadingReport",
    "discrepancy_coefficients",
    "distance",
    "equivalent",
    "check_contraction",
    "check_fading",
    "approximant",
    "distance_surface",
]


@dataclass(frozen=True)
class MetricConfig:
    """Sampling of the supremum over elapsed time.

    Parameters
    ----------
    t_grid : array_like or None
        Explicit positive, increasing sample times.  ``None`` builds
        ``n_points`` log-spaced times on ``[lo * tau_min, hi * tau_max]``.
    sup_tail_bound : bool
        Add the analytic majorant beyond the last sample to the uncertainty.
    """

    t_grid: tuple | None = None
    n_points: int = 64
    lo: float = 1e-3
    hi: float = 20.0
    sup_tail_bound: bool = True

    def __post_init__(self):
        if self.t_grid is not None:
            t = np.asarray(self.t_grid, dtype=float)
            if t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
                raise DomainError("t_grid must be nonempty, positive and increasing", path="metric.t_grid")
            object.__setattr__(self, "t_grid", tuple(t.tolist()))
        if self.n_points < 2:
            raise DomainError("n_points must be >= 2", path="metric.n_points")

    def times(self, taus: np.ndarray) -> np.ndarray:
        """Sample times including the ``t -> 0+`` endpoint."""
        if self.t_grid is not None:
            t = np.asarray(self.t_grid)
        else:
            lo = self.lo * float(taus.min()) if taus.size else self.lo
            hi = self.hi * float(taus.max()) if taus.size else self.hi
            t = np.geomspace(lo, hi, self.n_points)
        return np.concatenate([[0.0], t])


@dataclass(frozen=True)
class DistanceResult:
    """Grid maximum of the discrepancy with a one-sided uncertainty.

    The true supremum lies in ``[value, value + uncertainty]``.
    """

    value: float
    uncertainty: float
    argmax_t: float

    def __float__(self) -> float:
        return self.value

    @property
    def upper(self) -> float:
        return self.value + self.uncertainty


def _layout_blocks(M):
    return M.layout.blocks


def discrepancy_coefficients(M, H: History, H2: History) -> np.ndarray:
    """``a_i = C_i (J_i(H) - J_i(H2))`` at the present; shape ``(T, n)``."""
    if H.dim != M.n or H2.dim != M.n:
        raise ShapeError("histories do not match the model layout")
    K = M.kernel
    if K.taus.size == 0:
        return np.zeros((0, M.n))
    J1 = node_moments(H.grid, H.values, K.taus)[:, 0, :]
    J2 = node_moments(H2.grid, H2.values, K.taus)[:, 0, :]
    return np.einsum("tij,tj->ti", K.C, J1 - J2)


def _profile(a: np.ndarray, taus: np.ndarray, blocks, t: np.ndarray) -> np.ndarray:
    e = np.exp(-t[:, None] / taus[None, :])  # (S, T)
    vec = e @ a  # (S, n)
    return sum(np.linalg.norm(vec[:, b], axis=1) for b in blocks)


def _bracket(a, taus, blocks, t, include_tail):
    f = _profile(a, taus, blocks, t)
    j = int(np.argmax(f))
    value = float(f[j])
    # sum over blocks of per-term block norms bounds both |f'| and f itself
    norms = np.array([sum(np.linalg.norm(a[i, b]) for b in blocks) for i in range(taus.size)])
    slope = (np.exp(-t[:-1, None] / taus[None, :]) * (norms / taus)[None, :]).sum(axis=1)
    dt = np.diff(t)
    upper = np.maximum(f[:-1], f[1:]) + 0.5 * slope * dt
    top = float(upper.max()) if upper.size else value
    if include_tail:
        top = max(top, float(np.sum(norms * np.exp(-t[-1] / taus))))
    return value, max(0.0, top - value), float(t[j])


def distance(M, H: History, H2: History, cfg: MetricConfig | None = None) -> DistanceResult:
    """Supremum over elapsed time of the block-summed kernel discrepancy."""
    cfg = cfg or MetricConfig()
    a = discrepancy_coefficients(M, H, H2)
    taus = M.kernel.taus
    if taus.size == 0:
        return DistanceResult(0.0, 0.0, 0.0)
    t = cfg.times(taus)
    value, unc, arg = _bracket(a, taus, _layout_blocks(M), t, cfg.sup_tail_bound)
    return DistanceResult(value, unc, arg)


def distance_surface(SM, HH: History, HH2: History, cfg: MetricConfig | None = None) -> DistanceResult:
    """Distance between surface histories under a surface model."""
    if not getattr(SM.layout, "surface", False):
        raise ShapeError("distance_surface needs a model on the surface layout")
    return distance(SM, HH, HH2, cfg)


def equivalent(M, H: History, H2: History, tol: float = 1e-9, cfg: MetricConfig | None = None) -> bool:
    """Whether two histories with the same present value are kernel-indistinguishable.

    Raises
    ------
    PreconditionError
        If the present values differ by more than ``tol``.
    """
    gap = float(np.max(np.abs(H.initial - H2.initial)))
    if gap > tol:
        raise PreconditionError(f"present values differ by {gap:.3e}; equivalence needs equal present values")
    return distance(M, H, H2, cfg).upper < tol


@dataclass(frozen=True)
class ContractionReport:
    lhs: float
    rhs: float
    holds: bool
    slack: float


def check_contraction(M, H: History, H2: History, K: Process, cfg: MetricConfig | None = None) -> ContractionReport:
    """Compare ``d(K*H, K*H2)`` with ``d(H, H2)``."""
    left = distance(M, prolong(K, H), prolong(K, H2), cfg)
    right = distance(M, H, H2, cfg)
    slack = right.uncertainty + 1e-13 * max(1.0, right.value)
    return ContractionReport(left.value, right.value, left.value <= right.value + slack, slack)


@dataclass(frozen=True)
class FadingReport:
    """Smallest dyadic-grid durations after which prolonged histories are ``eps``-close.

    ``p_observed`` uses measured distances (value plus uncertainty);
    ``p_certified`` uses only the kernel tail bound ``2 R * tail(p)``
    with ``R`` the largest state norm of the two histories.
    """

    eps: float
    step: float
    p_observed: float
    p_certified: float
    radius: float

    @property
    def p(self) -> float:
        return self.p_observed


def _state_radius(*histories: History) -> float:
    return float(max(np.linalg.norm(h.values, axis=1).max() for h in histories))


def check_fading(M, H: History, H2: History, eps: float, K=None, step: float | None = None, cfg=None) -> FadingReport:
    """Locate the duration after which a common prolongation makes ``H, H2`` ``eps``-close.

    Parameters
    ----------
    K : callable or None
        ``K(p)`` returns the process of duration ``p`` prolonging both
        histories; by default the process holds the common present value.
    step : float or None
        Grid step; defaults to ``tau_min / 16``.
    """
    eps = float(eps)
    if not eps > 0:
        raise DomainError("eps must be > 0", path="eps")
    if np.max(np.abs(H.initial - H2.initial)) > 1e-12:
        raise PreconditionError("fading check prolongs both histories, which needs equal present values")
    taus = M.kernel.taus
    h = float(step) if step else (float(taus.min()) / 16 if taus.size else 1.0)
    R = _state_radius(H, H2)

    def bound(p):
        return 2 * R * block_tail_bound(M, p)

    j_cert = 0
    if bound(0.0) >= eps:
        lo, hi = 0, 1
        while bound(hi * h) >= eps:
            lo, hi = hi, hi * 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if bound(mid * h) >= eps:
                lo = mid
            else:
                hi = mid
        j_cert = hi

    if K is None:
        x0 = H.initial

        def K(p):
            return Process(p, np.zeros(1), x0[None, :], x0)

    def measured(j):
        if j == 0:
            return distance(M, H, H2, cfg).upper
        Kp = K(j * h)
        return distance(M, prolong(Kp, H), prolong(Kp, H2), cfg).upper

    # measured distance is non-increasing in p (contraction), so bisect below the certified index
    if measured(0) < eps:
        j_obs = 0
    else:
        lo, hi = 0, max(j_cert, 1)
        while measured(hi) >= eps:
            lo, hi = hi, hi * 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if measured(mid) >= eps:
                lo = mid
            else:
                hi = mid
        j_obs = hi
    return FadingReport(eps, h, j_obs * h, j_cert * h, R)


def approximant(H: History, H2: History, p: float) -> History:
    """``H_p * L_p * H2``: replay ``H`` over ``[0, p)``, bridge linearly to ``H2``.

    Its distance to ``H`` vanishes as ``p`` grows; the bridge keeps every
    junction continuous.
    """
    head = concat(restrict(H, p), lemma_process(H, H2, p))
    return prolong(head, H2)
