"""Pointwise balance residuals in the bulk and on a planar surface.

Fields are sampled on uniform grids and differentiated by second-order
finite differences.  :class:`TrigField` provides smooth manufactured fields
(sums of sinusoids of linear forms) that are closed under differentiation
and linear maps, so exact source terms can be built for refinement studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .surface import SurfaceFrame, jump

__all__ = [
    "FieldSample",
    "TrigField",
    "levi_civita",
    "axial_to_skew",
    "skw",
    "gradient",
    "divergence",
    "tangent_basis",
    "surface_gradient",
    "surface_divergence",
    "bulk_balance_residual",
    "surface_balance_residual",
    "manufactured_bulk",
    "manufactured_surface",
    "refinement_study",
]

MIN_POINTS = 5


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[i, k, j] = -1.0
    return eps


def axial_to_skew(v: np.ndarray) -> np.ndarray:
    """``e(v)_ij = eps_ijk v_k`` on the trailing axis of ``v``."""
    return np.einsum("ijk,...k->...ij", levi_civita(), v)


def skw(T: np.ndarray) -> np.ndarray:
    return 0.5 * (T - np.swapaxes(T, -1, -2))


@dataclass(frozen=True)
class FieldSample:
    """Nodal values on a uniform Cartesian grid.

    ``values`` has shape ``grid_shape + component_shape``; ``spacing`` is the
    common step along every axis.
    """

    values: np.ndarray
    spacing: float
    dim: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim < self.dim:
            raise ShapeError("field values have fewer axes than the grid dimension")
        if min(v.shape[: self.dim]) < MIN_POINTS:
            raise DomainError(f"grids need at least {MIN_POINTS} points per axis", path="field")
        object.__setattr__(self, "values", v)


def gradient(field: FieldSample) -> np.ndarray:
    """Gradient with the spatial index last; shape ``grid + comp + (dim,)``."""
    parts = np.gradient(field.values, field.spacing, axis=tuple(range(field.dim)), edge_order=2)
    if field.dim == 1:
        parts = [parts]
    return np.stack(parts, axis=-1)


def divergence(field: FieldSample) -> np.ndarray:
    """Contract the last component index with the spatial derivative."""
    g = gradient(field)
    return np.trace(g, axis1=-2, axis2=-1)


def tangent_basis(frame: SurfaceFrame) -> np.ndarray:
    """Orthonormal tangents ``t1, t2`` (rows) completing ``m`` to a right-handed frame."""
    m = frame.m
    seed = np.eye(3)[int(np.argmin(np.abs(m)))]
    t1 = seed - (seed @ m) * m
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(m, t1)
    return np.vstack([t1, t2])


def surface_gradient(field: FieldSample, frame: SurfaceFrame) -> np.ndarray:
    """``grad_S a = grad a (I - m m)`` for a field sampled on the plane.

    The sample axes run along :func:`tangent_basis`; the result carries a
    trailing 3-vector index.
    """
    if field.dim != 2:
        raise ShapeError("surface fields are sampled on a 2-d grid in the plane")
    g = gradient(field)
    return g @ tangent_basis(frame)


def surface_divergence(field: FieldSample, frame: SurfaceFrame) -> np.ndarray:
    return np.trace(surface_gradient(field, frame), axis1=-2, axis2=-1)


def bulk_balance_residual(P, b, S, z, beta, A) -> dict:
    """Residuals of the bulk balances with a constant map ``A``.

    Returns ``force = Div P + b``, ``micro = Div S - z + beta`` and
    ``moment = skw P - e(A^T z)/2``.  ``P`` and ``S`` are
    :class:`FieldSample` objects; the others are arrays on the same grid.
    """
    A = np.asarray(A, dtype=float)
    force = divergence(P) + np.asarray(b)
    micro = divergence(S) - np.asarray(z) + np.asarray(beta)
    moment = skw(P.values) - 0.5 * axial_to_skew(np.asarray(z) @ A)
    return {"force": force, "micro": micro, "moment": moment}


def surface_balance_residual(T_surf, S_surf, z_surf, P_plus, P_minus, S_plus, S_minus, frame, A) -> dict:
    """Residuals of the surface balances on a planar surface with constant ``A``.

    ``force = Div_S T + [P] m``, ``micro = Div_S SS - zz + [S] m`` and
    ``moment = skw(T Pi) - e(A^T zz)/2``.
    """
    A = np.asarray(A, dtype=float)
    m = frame.m
    force = surface_divergence(T_surf, frame) + jump(P_plus, P_minus) @ m
    micro = surface_divergence(S_surf, frame) - np.asarray(z_surf) + jump(S_plus, S_minus) @ m
    moment = skw(T_surf.values @ frame.projector) - 0.5 * axial_to_skew(np.asarray(z_surf) @ A)
    return {"force": force, "micro": micro, "moment": moment}


class TrigField:
    """Field whose components are combinations of shared sinusoids.

    Component ``c`` is ``sum_t coef[c, t] * sin(wave[t] . x + phase[t])``.
    Linear maps act on ``coef`` only and derivatives shift the phases, so
    the basis stays small under the operations used to build sources.

    Parameters
    ----------
    shape : tuple
        Component shape.
    coef : ndarray, shape (C, T)
    wave : ndarray, shape (T, d)
    phase : ndarray, shape (T,)
    """

    def __init__(self, shape, coef, wave, phase):
        self.shape = tuple(shape)
        self.coef = np.asarray(coef, dtype=float)
        self.wave = np.asarray(wave, dtype=float)
        self.phase = np.asarray(phase, dtype=float)
        if self.coef.shape[0] != int(np.prod(self.shape, dtype=int)):
            raise ShapeError("TrigField component count does not match its shape")

    @classmethod
    def random(cls, shape, dim, rng, terms=2, scale=1.0, freq=3.0):
        C = int(np.prod(shape, dtype=int))
        T = C * terms
        coef = np.zeros((C, T))
        coef[np.repeat(np.arange(C), terms), np.arange(T)] = scale * rng.uniform(-1, 1, T)
        return cls(shape, coef, rng.uniform(-freq, freq, (T, dim)), rng.uniform(0, 2 * np.pi, T))

    @property
    def dim(self) -> int:
        return self.wave.shape[-1]

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        basis = np.sin(pts @ self.wave.T + self.phase)
        return (basis @ self.coef.T).reshape(pts.shape[:-1] + self.shape)

    def derivative(self, j: int, direction=None) -> "TrigField":
        """Partial derivative along axis ``j`` (or along a direction vector)."""
        d = self.wave[:, j] if direction is None else self.wave @ np.asarray(direction, dtype=float)
        return TrigField(self.shape, self.coef * d[None, :], self.wave, self.phase + 0.5 * np.pi)

    def gradient(self) -> "TrigField":
        """Gradient with the spatial index appended to the component shape."""
        C, T = self.coef.shape
        coef = (self.coef[:, None, :] * self.wave.T[None, :, :]).reshape(C * self.dim, T)
        return TrigField(self.shape + (self.dim,), coef, self.wave, self.phase + 0.5 * np.pi)

    def linear(self, L: np.ndarray, shape) -> "TrigField":
        """Apply the matrix ``L`` (out x in) to the flattened components."""
        return TrigField(shape, np.asarray(L, dtype=float) @ self.coef, self.wave, self.phase)

    def einsum(self, subscripts: str, operand: np.ndarray, shape) -> "TrigField":
        """Linear map given as ``np.einsum(subscripts, field, operand)``."""
        C = self.coef.shape[0]
        basis = np.eye(C).reshape((C,) + self.shape)
        images = np.stack([np.einsum(subscripts, basis[c], operand) for c in range(C)], axis=-1)
        return self.linear(images.reshape(-1, C), shape)

    def scale(self, c: float) -> "TrigField":
        return TrigField(self.shape, c * self.coef, self.wave, self.phase)

    def __add__(self, other: "TrigField") -> "TrigField":
        if self.shape != other.shape:
            raise ShapeError("cannot add TrigFields of different shapes")
        return TrigField(
            self.shape,
            np.hstack([self.coef, other.coef]),
            np.vstack([self.wave, other.wave]),
            np.concatenate([self.phase, other.phase]),
        )

    def __neg__(self) -> "TrigField":
        return self.scale(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def trace_last(self) -> "TrigField":
        """Contract the last two component indices."""
        a, b = self.shape[-2], self.shape[-1]
        sel = np.zeros((a, b))
        n = min(a, b)
        sel[np.arange(n), np.arange(n)] = 1.0
        return self.einsum("...ij,ij->...", sel, self.shape[:-2])


def _skew_of(v: TrigField) -> TrigField:
    return v.einsum("k,ijk->ij", levi_civita(), (3, 3))


def _grid_points(n: int, dim: int):
    x = np.linspace(0.0, 1.0, n)
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    return np.stack(mesh, axis=-1), x[1] - x[0]


def manufactured_bulk(k: int, A, seed=0):
    """Smooth bulk fields satisfying all three balances exactly.

    ``z`` is defined from the micro balance, ``P`` is a symmetric field plus
    the skew part required by the moment balance, and ``b`` closes the force
    balance.  Returns a function ``level(n)`` sampling everything on an
    ``n^3`` grid and the residuals with ``z`` taken from the discrete micro
    balance.
    """
    rng = np.random.default_rng(seed)
    A = np.asarray(A, dtype=float).reshape(k, 3)
    S = TrigField.random((k, 3), 3, rng)
    beta = TrigField.random((k,), 3, rng)
    z = S.gradient().trace_last() + beta
    Q = TrigField.random((3, 3), 3, rng)
    P = _symmetrize(Q) + _skew_of(z.einsum("a,ai->i", A, (3,))).scale(0.5)
    b = -P.gradient().trace_last()

    def level(n: int) -> dict:
        pts, h = _grid_points(n, 3)
        Ps = FieldSample(P(pts), h, 3)
        Ss = FieldSample(S(pts), h, 3)
        z_exact = z(pts)
        beta_v = beta(pts)
        z_disc = divergence(Ss) + beta_v
        res = bulk_balance_residual(Ps, b(pts), Ss, z_exact, beta_v, A)
        res["moment"] = skw(Ps.values) - 0.5 * axial_to_skew(z_disc @ A)
        return res

    return level


def _symmetrize(Q: TrigField) -> TrigField:
    C = 9
    L = np.zeros((C, C))
    for i in range(3):
        for j in range(3):
            L[3 * i + j, 3 * i + j] += 0.5
            L[3 * i + j, 3 * j + i] += 0.5
    return Q.linear(L, (3, 3))


def manufactured_surface(k: int, A, frame: SurfaceFrame, seed=0):
    """Smooth surface fields and bulk traces satisfying the surface balances.

    ``zz`` comes from the surface micro balance, ``T`` is built with
    ``T m = 0`` and the skew part required by the moment balance, and the
    traction jump ``[P] m`` closes the force balance.  Returns
    ``level(n)`` sampling an ``n^2`` grid of the plane through the origin.
    """
    rng = np.random.default_rng(seed)
    A = np.asarray(A, dtype=float).reshape(k, 3)
    m = frame.m
    Pi = frame.projector
    tb = tangent_basis(frame)

    def surf_div(F: TrigField) -> TrigField:
        # tangential divergence: sum over tangents of the derivative along t contracted with t
        out = None
        for t in tb:
            d = F.derivative(0, direction=t).einsum("...j,j->...", t, F.shape[:-1])
            out = d if out is None else out + d
        return out

    SS = TrigField.random((k, 3), 3, rng).einsum("aj,jl->al", Pi, (k, 3))
    S_minus = TrigField.random((k, 3), 3, rng)
    S_plus = TrigField.random((k, 3), 3, rng)
    zz = surf_div(SS) + (S_plus - S_minus).einsum("aj,j->a", m, (k,))
    v = zz.einsum("a,ai->i", A, (3,))
    E = _skew_of(v).scale(0.5)
    r = E.einsum("ij,j->i", -m, (3,))
    Tt = _project_tangential(_symmetrize(TrigField.random((3, 3), 3, rng)), Pi)
    T = Tt + r.einsum("i,j->ij", m, (3, 3)) + r.einsum("j,i->ij", m, (3, 3)) + E
    P_minus = TrigField.random((3, 3), 3, rng)
    P_plus = P_minus - surf_div(T).einsum("i,j->ij", m, (3, 3))

    def level(n: int) -> dict:
        u, h = _grid_points(n, 2)
        pts = u @ tb
        Ts = FieldSample(T(pts), h, 2)
        Ss = FieldSample(SS(pts), h, 2)
        Sp, Sm = S_plus(pts), S_minus(pts)
        zz_disc = surface_divergence(Ss, frame) + jump(Sp, Sm) @ m
        res = surface_balance_residual(Ts, Ss, zz(pts), P_plus(pts), P_minus(pts), Sp, Sm, frame, A)
        res["moment"] = skw(Ts.values @ Pi) - 0.5 * axial_to_skew(zz_disc @ A)
        return res

    return level


def _project_tangential(T: TrigField, Pi: np.ndarray) -> TrigField:
    L = np.einsum("ai,bj->abij", Pi, Pi).reshape(9, 9)
    return T.linear(L, (3, 3))


def refinement_study(level, sizes=(17, 33, 65)) -> dict:
    """Max-norm residuals per grid size and observed orders under halving."""
    errors = {}
    for n in sizes:
        res = level(n)
        for key, val in res.items():
            errors.setdefault(key, []).append(float(np.max(np.abs(val))))
    orders = {}
    for key, errs in errors.items():
        e = np.asarray(errs)
        with np.errstate(divide="ignore", invalid="ignore"):
            orders[key] = np.log2(e[:-1] / e[1:]).tolist()
    return {"sizes": list(sizes), "errors": errors, "orders": orders}
