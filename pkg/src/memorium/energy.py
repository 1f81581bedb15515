"""Free energies: lower potentials of the work.

Three functionals are available:

``quadratic_graffi``
    ``psi(H) = X0 . G_inf X0 / 2 - (1/2) int_0^inf Y(s) . G'(s) Y(s) ds``
    with ``Y(s) = X(s) - X0``.  Explicit, exact per segment, and a free
    energy whenever every Prony matrix is symmetric positive semidefinite.
``max_from_source``
    ``H -> w^r_{H0}(H)``, the relaxed work needed to reach ``H`` from ``H0``.
``min_to_source``
    ``H -> -w^r_H(H0)``, the work recoverable on the way back to ``H0``.

Rates are physical-time rates throughout, so the local dissipation
inequality reads ``psidot - Y . Xdot = delta_psi <= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._quadrature import exp_poly_means
from .constitutive import respond
from .errors import DomainError, PreconditionError, ShapeError
from .history import History, Process, constant_history, prolong, shift, varied_history
from .relaxed import RelaxationProblem, relaxed_work
from .work import work_over

__all__ = [
    "FreeEnergyFunctional",
    "ChainRuleReport",
    "DissipationReport",
    "RestrictionReport",
    "evaluate",
    "graffi_value",
    "graffi_gradient",
    "graffi_delta",
    "check_dissipation_inequality",
    "chain_rule",
    "clausius_duhem_restrictions",
    "evaluate_surface",
    "check_dissipation_surface",
]

KINDS = ("quadratic_graffi", "max_from_source", "min_to_source")


def _check_graffi_kernel(M) -> None:
    K = M.kernel
    scale = max(1.0, float(np.abs(K.G_inf).max()) if K.G_inf.size else 1.0)
    if not np.allclose(K.G_inf, K.G_inf.T, rtol=0, atol=1e-12 * scale):
        raise PreconditionError("quadratic_graffi needs a symmetric G_inf")
    for i, C in enumerate(K.C):
        if not np.allclose(C, C.T, rtol=0, atol=1e-12 * max(1.0, np.abs(C).max())):
            raise PreconditionError(f"quadratic_graffi needs symmetric Prony matrices (term {i})")
        if np.linalg.eigvalsh(C)[0] < -1e-12 * max(1.0, np.abs(C).max()):
            raise PreconditionError(f"quadratic_graffi needs positive semidefinite Prony matrices (term {i})")


@dataclass(frozen=True)
class FreeEnergyFunctional:
    """A free-energy candidate bound to a model.

    Parameters
    ----------
    kind : {"quadratic_graffi", "max_from_source", "min_to_source"}
    source : History or None
        Reference history of the relaxed kinds; zero constant by default.
    relax_options : dict
        Extra :class:`~memorium.relaxed.RelaxationProblem` fields.
    """

    kind: str
    model: object
    source: History | None = None
    relax_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown free energy kind '{self.kind}'", path="energy.kind")
        if self.kind == "quadratic_graffi":
            _check_graffi_kernel(self.model)
        elif self.source is None:
            object.__setattr__(self, "source", constant_history(np.zeros(self.model.n)))


def _segments(H: History):
    g, V = H.grid, H.values
    return g[:-1], np.diff(g), V[:-1], np.diff(V, axis=0)


def graffi_value(M, H: History) -> float:
    """The Graffi-type quadratic free energy of ``H``."""
    K = M.kernel
    X0 = H.initial
    a, L, Va, dV = _segments(H)
    Ya = Va - X0
    YM = H.final - X0
    total = 0.5 * float(X0 @ K.G_inf @ X0)
    for tau, C in zip(K.taus, K.C):
        E = exp_poly_means(L, tau)
        w = np.exp(-a / tau) * L
        quad = (
            np.einsum("si,ij,sj->s", Ya, C, Ya) * E[0]
            + 2 * np.einsum("si,ij,sj->s", Ya, C, dV) * E[1]
            + np.einsum("si,ij,sj->s", dV, C, dV) * E[2]
        )
        seg = float(np.sum(w * quad))
        tail = tau * np.exp(-H.span / tau) * float(YM @ C @ YM)
        total += 0.5 * (seg + tail) / tau
    return total


def graffi_gradient(M, H: History) -> np.ndarray:
    """Derivative of the Graffi energy with respect to the present value.

    Computed from incomplete-gamma segment integrals, independently of the
    moment recursion used by the response.
    """
    K = M.kernel
    X0 = H.initial
    a, L, Va, dV = _segments(H)
    out = K.G_inf @ X0
    for tau, C in zip(K.taus, K.C):
        E = exp_poly_means(L, tau, kmax=1)
        w = np.exp(-a / tau) * L
        m = (w[:, None] * (Va * E[0][:, None] + dV * E[1][:, None])).sum(axis=0) / tau
        m = m + np.exp(-H.span / tau) * H.final
        out = out + C @ (X0 - m)
    return out


def graffi_delta(M, H: History) -> float:
    """History part of the energy rate: ``int X'(s) . G'(s) (X(s) - X0) ds``.

    ``X'`` is the lag derivative; the value is non-positive for symmetric
    positive semidefinite Prony matrices.
    """
    K = M.kernel
    X0 = H.initial
    a, L, Va, dV = _segments(H)
    Ya = Va - X0
    total = 0.0
    for tau, C in zip(K.taus, K.C):
        E = exp_poly_means(L, tau, kmax=1)
        w = np.exp(-a / tau)
        seg = np.einsum("si,ij,sj->s", dV, C, Ya) * E[0] + np.einsum("si,ij,sj->s", dV, C, dV) * E[1]
        total -= float(np.sum(w * seg)) / tau
    return total


def _relaxed(psi: FreeEnergyFunctional, source: History, target: History) -> float:
    return relaxed_work(RelaxationProblem(psi.model, source, target, **psi.relax_options)).value


def evaluate(psi: FreeEnergyFunctional, H: History) -> float:
    """Value of the free energy at ``H``."""
    if H.dim != psi.model.n:
        raise ShapeError("history does not match the model layout")
    if psi.kind == "quadratic_graffi":
        return graffi_value(psi.model, H)
    if psi.kind == "max_from_source":
        return _relaxed(psi, psi.source, H)
    return -_relaxed(psi, H, psi.source)


@dataclass(frozen=True)
class DissipationReport:
    """``increment <= work + tol`` along a process, plus the sampled local rate form."""

    increment: float
    work: float
    holds: bool
    max_local_rate: float | None = None


def check_dissipation_inequality(
    psi: FreeEnergyFunctional, K: Process, H: History, tol: float = 1e-9, samples: int = 8
) -> DissipationReport:
    """Compare ``psi(K*H) - psi(H)`` with the work ``w(K, H)``.

    For ``quadratic_graffi`` the local form ``delta_psi <= 0`` is also
    sampled at ``samples`` points inside every segment of the process.
    """
    KH = prolong(K, H)
    inc = evaluate(psi, KH) - evaluate(psi, H)
    w = work_over(psi.model, K, H, check=False).value
    slack = tol * max(1.0, abs(w), abs(inc))
    if psi.kind != "quadratic_graffi":
        return DissipationReport(inc, w, inc <= w + slack)
    g = K.nodes[0]
    lags = []
    for a, b in zip(g[:-1], g[1:]):
        if b > a:
            lags.extend(a + (b - a) * (np.arange(samples) + 0.5) / samples)
    rate = max(graffi_delta(psi.model, shift(KH, s)) for s in lags) if lags else 0.0
    return DissipationReport(inc, w, inc <= w + slack and rate <= slack, rate)


@dataclass(frozen=True)
class ChainRuleReport:
    """Analytic and finite-difference rates of ``t -> psi(H^t)`` in physical time."""

    t: float
    analytic: float
    finite_difference: float
    power: float
    delta: float
    step: float

    @property
    def discrepancy(self) -> float:
        return abs(self.analytic - self.finite_difference)


def chain_rule(psi: FreeEnergyFunctional, H: History, t: float, h: float) -> ChainRuleReport:
    """Check ``psidot = Y(H^t) . Xdot(t) + delta_psi(H^t)`` at lag ``t``.

    The central difference uses ``psi(H^{t-h})`` and ``psi(H^{t+h})``;
    physical time runs against the lag.

    Raises
    ------
    DomainError
        If ``[t - h, t + h]`` leaves the history or contains a node, where
        the piecewise-linear history is not differentiable.
    """
    if psi.kind != "quadratic_graffi":
        raise DomainError("chain_rule is implemented for quadratic_graffi", path="energy.kind")
    if t - h < 0 or t + h > H.span:
        raise DomainError("finite-difference stencil leaves the history", path="t")
    inside = (H.grid > t - h) & (H.grid < t + h)
    if np.any(inside):
        raise DomainError("grid too coarse near t: a node lies inside the stencil", path="t")
    M = psi.model
    Ht = shift(H, t)
    rate_phys = -H.rate(t)
    power = float(np.asarray(respond(M, Ht)) @ rate_phys)
    delta = graffi_delta(M, Ht)
    fd = (graffi_value(M, shift(H, t - h)) - graffi_value(M, shift(H, t + h))) / (2 * h)
    return ChainRuleReport(float(t), power + delta, fd, power, delta, float(h))


@dataclass(frozen=True)
class RestrictionReport:
    """Gradient of the energy against the response, blockwise.

    ``varied`` maps each ``alpha`` to the extracted vector
    ``d psi/dX - Y`` obtained from varied-history probes.
    """

    gradient: np.ndarray
    response: np.ndarray
    block_errors: dict
    varied: dict = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return max(self.block_errors.values())


def _dissipation_rate(M, H: History, t: float, h: float, rate_lag) -> float:
    """Finite-difference energy rate minus power at lag ``t`` along ``H``."""
    fd = (graffi_value(M, shift(H, t - h)) - graffi_value(M, shift(H, t + h))) / (2 * h)
    return fd - float(np.asarray(respond(M, shift(H, t))) @ (-np.asarray(rate_lag)))


def clausius_duhem_restrictions(
    psi: FreeEnergyFunctional,
    M,
    H: History,
    t: float = 0.0,
    alphas=(),
    components=None,
    fd_ratio: float = 1e-2,
) -> RestrictionReport:
    """Compare ``d psi / dX`` at the present of ``H^t`` with the response.

    With ``alphas`` the identity is also extracted from varied histories:
    for each unit lag rate ``+-e_c`` the dissipation rate
    ``psidot - Y . Xdot`` is measured by finite differences, and half the
    difference of the two signs isolates component ``c`` of
    ``d psi/dX - Y``.  The extracted vector should vanish as ``alpha -> 0``.
    """
    if psi.kind != "quadratic_graffi":
        raise DomainError("clausius_duhem_restrictions is implemented for quadratic_graffi", path="energy.kind")
    Kp, Km = psi.model.kernel, M.kernel
    same = (
        Kp.taus.shape == Km.taus.shape
        and np.allclose(Kp.taus, Km.taus)
        and np.allclose(Kp.G_inf, Km.G_inf)
        and np.allclose(Kp.C, Km.C)
    )
    if not same:
        raise PreconditionError("energy and response must come from the same kernel")
    Ht = shift(H, t)
    grad = graffi_gradient(M, Ht)
    resp = np.asarray(respond(M, Ht))
    errors = {name: float(np.max(np.abs(grad[b] - resp[b]))) for name, b in zip(M.layout.dual_names, M.layout.blocks)}
    varied = {}
    comps = range(M.n) if components is None else components
    for alpha in alphas:
        alpha = float(alpha)
        resolution = int(np.ceil(2.0 / alpha))
        h = fd_ratio * alpha * alpha
        extracted = np.zeros(M.n)
        for c in comps:
            e = np.zeros(M.n)
            e[c] = 1.0
            rates = []
            for sign in (1.0, -1.0):
                Ha = varied_history(H, t, alpha, sign * e, resolution=resolution)
                rates.append(_dissipation_rate(M, Ha, t, h, Ha.rate(t)))
            # rate = (dpsi/dX - Y) . (-sign e) + delta_psi
            extracted[c] = -(rates[0] - rates[1]) / 2
        varied[alpha] = extracted
    return RestrictionReport(grad, resp, errors, varied)


def evaluate_surface(phi: FreeEnergyFunctional, HH: History) -> float:
    """Surface free energy of a surface history."""
    if not getattr(phi.model.layout, "surface", False):
        raise ShapeError("evaluate_surface needs a model on the surface layout")
    return evaluate(phi, HH)


def check_dissipation_surface(phi: FreeEnergyFunctional, KK: Process, HH: History, tol: float = 1e-9):
    """Surface dissipation inequality against the reduced surface work."""
    if not getattr(phi.model.layout, "surface", False):
        raise ShapeError("check_dissipation_surface needs a model on the surface layout")
    return check_dissipation_inequality(phi, KK, HH, tol)
