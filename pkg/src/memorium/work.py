"""Work done along histories and along prolongations.

The work density of a history is the power of the dual measures integrated
over the whole past::

    w(H) = int_0^inf Y(H^s) . Xdot(s) ds

with ``Xdot`` the rate in physical time (the negative lag derivative).  For
a piecewise-linear history each segment contributes ``-(dX) . Ybar`` where
``Ybar`` is the exact segment average of the response, so the default route
has no discretization error.  :func:`work_over` also integrates the response
along the process with composite Gauss-Legendre panels as an independent
check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._forms import work_terms
from .constitutive import respond_profile
from .errors import ConsistencyError, PreconditionError, ShapeError
from .history import History, Process, concat, lemma_process, prolong, restrict
from .metric import distance

__all__ = [
    "WorkReport",
    "work",
    "work_over",
    "work_over_direct",
    "retardation_gap",
    "process_variation",
    "check_state_function",
    "StateFunctionReport",
    "lemma_history",
    "work_surface",
    "work_surface_reduced",
]

GAUSS_ORDER = 4
QUAD_TOL = 1e-9


@dataclass(frozen=True)
class WorkReport:
    """Work value with its per-block split.

    ``breakdown`` maps ``"sigma.W"``-style labels (dual block dotted with
    the rate of the matching state block) to contributions summing to
    ``value``.
    """

    value: float
    breakdown: dict = field(default_factory=dict)
    quadrature_error_bound: float = 0.0

    def __float__(self) -> float:
        return self.value


def _breakdown(M, per_component: np.ndarray) -> dict:
    layout = M.layout
    return {
        f"{d}.{s}": float(per_component[b].sum())
        for d, s, b in zip(layout.dual_names, layout.state_names, layout.blocks)
    }


def _report(M, terms: np.ndarray) -> WorkReport:
    per_comp = terms.sum(axis=0)
    value = float(per_comp.sum())
    # rounding in the segment sums is the only error of the exact route
    bound = 8 * np.finfo(float).eps * float(np.abs(terms).sum())
    return WorkReport(value, _breakdown(M, per_comp), bound)


def _check(M, H):
    if H.dim != M.n:
        raise ShapeError(f"history dimension {H.dim} does not match model size {M.n}")


def work(M, H: History) -> WorkReport:
    """Work density ``w(H)`` by exact segment integration."""
    _check(M, H)
    K = M.kernel
    return _report(M, work_terms(H.grid, H.values, K.G0, K.C, K.taus))


def _gauss_panels(a: float, b: float, width: float) -> np.ndarray:
    """Panel edges on ``[a, b]`` fine near the older end ``b``, where kinks relax."""
    L = b - a
    if L <= width:
        return np.array([a, b])
    edges = [b]
    w = width
    while edges[-1] - w > a:
        edges.append(edges[-1] - w)
        w *= 1.5
    edges.append(a)
    return np.array(edges[::-1])


def work_over_direct(M, K: Process, H: History, tol: float = QUAD_TOL) -> WorkReport:
    """``int_0^p Y((K*H)^s) . Kdot(s) ds`` by composite Gauss-Legendre panels.

    Panels are refined until the difference between one panel and its two
    halves, summed over panels, falls below ``tol`` times the work scale.
    """
    _check(M, H)
    P = prolong(K, H)
    kg, kv = K.nodes
    xg, xw = np.polynomial.legendre.leggauss(GAUSS_ORDER)
    tau_min = M.kernel.tau_min
    per_comp = np.zeros(M.n)
    scale = 0.0
    err = 0.0

    def panel_integral(edges, rate):
        a, b = edges[:-1], edges[1:]
        half = 0.5 * (b - a)
        s = (0.5 * (a + b))[:, None] + half[:, None] * xg[None, :]
        Y = respond_profile(M, P, s.reshape(-1)).reshape(s.shape + (M.n,))
        return np.einsum("p,q,pqn->pn", half, xw, Y) * rate[None, :]

    for j in range(kg.size - 1):
        a, b = kg[j], kg[j + 1]
        if b <= a:
            continue
        rate = -(kv[j + 1] - kv[j]) / (b - a)
        if not np.any(rate):
            continue
        width = 0.5 * tau_min
        for _ in range(12):
            edges = _gauss_panels(a, b, width)
            coarse = panel_integral(edges, rate)
            mids = 0.5 * (edges[:-1] + edges[1:])
            fine_edges = np.sort(np.concatenate([edges, mids]))
            fine = panel_integral(fine_edges, rate)
            seg_err = float(np.abs(coarse.sum() - fine.sum()))
            seg_scale = float(np.abs(fine).sum())
            if seg_err <= tol * max(1.0, seg_scale):
                break
            width *= 0.5
        per_comp += fine.sum(axis=0)
        scale += seg_scale
        err += seg_err
    return WorkReport(float(per_comp.sum()), _breakdown(M, per_comp), err)


def work_over(M, K: Process, H: History, check: bool = True, tol: float = QUAD_TOL) -> WorkReport:
    """Work ``w(K, H)`` spent along the process ``K`` applied to ``H``.

    Returns the direct integral over the process and checks it against the
    exact difference ``w(K*H) - w(H)``.

    Raises
    ------
    ContinuityError
        If ``K`` does not end at ``H(0)``.
    ConsistencyError
        If the two routes disagree beyond the quadrature bound.
    """
    _check(M, H)
    P = prolong(K, H)
    Kn = M.kernel
    terms = work_terms(P.grid, P.values, Kn.G0, Kn.C, Kn.taus, upto=K.duration)
    exact = _report(M, terms)
    if not check:
        return exact
    direct = work_over_direct(M, K, H, tol)
    diff = float(work(M, P).value - work(M, H).value)
    scale = max(1.0, float(np.abs(terms).sum()))
    allowed = 10 * direct.quadrature_error_bound + 10 * tol * scale
    if abs(direct.value - diff) > allowed or abs(direct.value - exact.value) > allowed:
        raise ConsistencyError(
            f"work over process: direct {direct.value:.12g}, difference {diff:.12g}, "
            f"exact {exact.value:.12g} disagree beyond {allowed:.2e}"
        )
    return direct


def process_variation(M, K: Process) -> float:
    """Largest per-block total variation ``int_0^p |Xdot_B| ds`` of a process (Frobenius norm)."""
    _, v = K.nodes
    dv = np.diff(v, axis=0)
    return float(max(np.linalg.norm(dv[:, b], axis=1).sum() for b in M.layout.blocks))


@dataclass(frozen=True)
class StateFunctionReport:
    """``|w(K, H) - w(K, H2)| <= variation * d(H, H2)``."""

    lhs: float
    variation: float
    distance: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.variation * self.distance + 1e-12 * max(1.0, self.lhs)


def check_state_function(M, K: Process, H: History, H2: History) -> StateFunctionReport:
    """Lipschitz bound of the work over ``K`` in the history it prolongs.

    Along ``K`` the two responses differ by a hereditary term whose block
    norms are bounded by the distance, so pairing with the rates costs at
    most the largest block variation.  ``H`` and ``H2`` must share the
    present value ``K`` ends on.
    """
    lhs = abs(work_over(M, K, H, check=False).value - work_over(M, K, H2, check=False).value)
    return StateFunctionReport(lhs, process_variation(M, K), distance(M, H, H2).upper)


def retardation_gap(M, H: History, H2: History, strict: bool = False) -> float:
    """``(X_H(inf) . G_inf X_H(inf) - X_H2(0) . G_inf X_H2(0)) / 2``.

    The quadratic form runs over the whole flattened state, so mixed blocks
    of ``G_inf`` enter through its symmetric part.
    """
    G = M.kernel.G_inf
    if strict and not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max())):
        raise PreconditionError("retardation_gap in strict mode needs a symmetric G_inf")
    a, b = H.final, H2.initial
    return 0.5 * float(a @ G @ a - b @ G @ b)


def lemma_history(H: History, H2: History, p: float) -> History:
    """``H_p * L_p * H2``: ``H`` replayed over ``[0, p)``, a linear bridge of length ``p``, then ``H2``."""
    return prolong(concat(restrict(H, p), lemma_process(H, H2, p)), H2)


def work_surface_reduced(SM, HH: History) -> WorkReport:
    """Reduced surface work: surface measures against surface state rates."""
    if not getattr(SM.layout, "surface", False):
        raise ShapeError("work_surface_reduced needs a model on the surface layout")
    return work(SM, HH)


def _resample(H: History, grid: np.ndarray) -> np.ndarray:
    if H.has_jumps:
        raise ShapeError("surface trace histories must be continuous")
    return H(grid)


def work_surface(SM, M, HH: History, traces: dict) -> WorkReport:
    """Full surface work: reduced part plus the power of averaged bulk tractions on jumps.

    Parameters
    ----------
    traces : dict
        ``H_plus``, ``H_minus``: bulk histories on the two sides;
        ``jump_y``: 3-component history of the displacement jump;
        ``jump_nu``: k-component history of the descriptor jump.  Missing
        jumps are taken as zero.
    """
    reduced = work_surface_reduced(SM, HH)
    Hp, Hm = traces["H_plus"], traces["H_minus"]
    for name, h in (("H_plus", Hp), ("H_minus", Hm)):
        if h.dim != M.n:
            raise ShapeError(f"trace {name} does not match the bulk model", path=f"traces.{name}")
    k = M.layout.k
    jy = traces.get("jump_y")
    jn = traces.get("jump_nu")
    if jy is not None and jy.dim != 3:
        raise ShapeError("jump_y must have 3 components", path="traces.jump_y")
    if jn is not None and jn.dim != k:
        raise ShapeError(f"jump_nu must have {k} components", path="traces.jump_nu")
    grids = [Hp.grid, Hm.grid] + [h.grid for h in (jy, jn) if h is not None]
    grid = np.unique(np.concatenate(grids))
    Kn = M.kernel
    from ._forms import mean_segment_stress

    vp, vm = _resample(Hp, grid), _resample(Hm, grid)
    sbar = 0.5 * (
        mean_segment_stress(grid, vp, Kn.G0, Kn.C, Kn.taus) + mean_segment_stress(grid, vm, Kn.G0, Kn.C, Kn.taus)
    )
    m = SM.frame.m
    sig = sbar[:, M.layout.W].reshape(-1, 3, 3) @ m
    micro = sbar[:, M.layout.N].reshape(-1, k, 3) @ m
    trace_y = trace_nu = 0.0
    if jy is not None:
        trace_y = -float(np.sum(sig * np.diff(_resample(jy, grid), axis=0)))
    if jn is not None:
        trace_nu = -float(np.sum(micro * np.diff(_resample(jn, grid), axis=0)))
    breakdown = dict(reduced.breakdown)
    breakdown["sigma_m.jump_y"] = trace_y
    breakdown["S_m.jump_nu"] = trace_nu
    return WorkReport(reduced.value + trace_y + trace_nu, breakdown, reduced.quadrature_error_bound)
