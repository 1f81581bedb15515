"""Prony-series relaxation kernels and material models.

A relaxation kernel is ``G(s) = G_inf + sum_i C_i exp(-s / tau_i)`` acting on
the flattened state.  Its nine dual-by-state blocks (``sigma_W``, ``z_nu``,
...) are views into the assembled ``n x n`` matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._forms import work_form
from ._validation import as_float_array, check_rng, check_square
from .errors import ConfigError, DomainError, ShapeError
from .history import History
from .statespace import BlockLayout, FlatLayout, layout_from_dict

__all__ = [
    "PronyKernel",
    "MaterialModel",
    "SurfaceModel",
    "DissipativityVerdict",
    "eval_G",
    "eval_Gdot",
    "tail_integral_abs",
    "block_tail_bound",
    "check_dissipative",
    "model_from_dict",
]

SYM_TOL = 1e-12


@dataclass(frozen=True)
class PronyKernel:
    """``G(s) = G_inf + sum_i C_i exp(-s/tau_i)``.

    Parameters
    ----------
    G_inf : array_like, shape (n, n) or (n*n,)
    taus : array_like, shape (T,)
        Relaxation times, all strictly positive.
    C : array_like, shape (T, n, n)
    """

    G_inf: np.ndarray = field(repr=False)
    taus: np.ndarray
    C: np.ndarray = field(repr=False)

    def __post_init__(self):
        G_inf = as_float_array(self.G_inf, "model.G_inf")
        n = int(round(np.sqrt(G_inf.size)))
        G_inf = check_square(G_inf, n, "model.G_inf")
        taus = as_float_array(self.taus, "model.terms.tau").reshape(-1)
        if np.any(taus <= 0):
            raise DomainError("relaxation times must be > 0", path="model.terms.tau")
        C = as_float_array(self.C, "model.terms.C")
        if taus.size == 0:
            C = np.zeros((0, n, n))
        C = C.reshape(taus.size, n, n)
        for arr in (G_inf, taus, C):
            arr.setflags(write=False)
        object.__setattr__(self, "G_inf", G_inf)
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.G_inf.shape[0]

    @property
    def G0(self) -> np.ndarray:
        """``G(0) = G_inf + sum_i C_i``."""
        return self.G_inf + self.C.sum(axis=0)

    @property
    def tau_min(self) -> float:
        return float(self.taus.min()) if self.taus.size else 1.0

    @property
    def tau_max(self) -> float:
        return float(self.taus.max()) if self.taus.size else 1.0

    def is_symmetric(self, tol: float = SYM_TOL) -> bool:
        mats = [self.G_inf, *self.C]
        return all(np.allclose(m, m.T, rtol=0, atol=tol * max(1.0, np.abs(m).max())) for m in mats)

    def scaled(self, factor: float) -> "PronyKernel":
        return PronyKernel(self.G_inf * factor, self.taus, self.C * factor)


def _check_lag(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("kernels are evaluated at lags s >= 0", path="s")
    return s


def _kernel_of(M) -> PronyKernel:
    return M.kernel if hasattr(M, "kernel") else M


def eval_G(M, s) -> np.ndarray:
    """``G(s)``; shape ``(n, n)`` or ``s.shape + (n, n)``."""
    K = _kernel_of(M)
    s = _check_lag(s)
    e = np.exp(-s[..., None] / K.taus)
    return K.G_inf + np.einsum("...t,tij->...ij", e, K.C)


def eval_Gdot(M, s) -> np.ndarray:
    """``G'(s) = -sum_i (C_i/tau_i) exp(-s/tau_i)``."""
    K = _kernel_of(M)
    s = _check_lag(s)
    e = -np.exp(-s[..., None] / K.taus) / K.taus
    return np.einsum("...t,tij->...ij", e, K.C)


def tail_integral_abs(M, p: float) -> float:
    """``sum_i ||C_i||_F exp(-p/tau_i)``, a bound on ``int_p^inf ||G'(s)||_F ds``."""
    K = _kernel_of(M)
    p = float(p)
    if p < 0:
        raise DomainError("p must be >= 0", path="p")
    norms = np.sqrt(np.sum(K.C**2, axis=(1, 2)))
    return float(np.sum(norms * np.exp(-p / K.taus)))


def block_tail_bound(M, p: float) -> float:
    """``sum_i sum_A ||C_i[A, :]||_2 exp(-p/tau_i)`` over the dual blocks ``A``.

    Multiplied by twice the largest Euclidean state norm of two histories it
    bounds their distance after a common prolongation of duration ``p``.
    """
    K = _kernel_of(M)
    layout = getattr(M, "layout", FlatLayout(K.n))
    total = 0.0
    for rows in layout.blocks:
        for i, tau in enumerate(K.taus):
            total += np.linalg.norm(K.C[i][rows, :], 2) * np.exp(-float(p) / tau)
    return float(total)


def _parse_matrix(spec, layout, path: str) -> np.ndarray:
    n = layout.n
    if isinstance(spec, dict) and "identity" in spec:
        return float(spec["identity"]) * np.eye(n)
    if isinstance(spec, list) and spec and isinstance(spec[0], dict):
        out = np.zeros((n, n))
        duals = dict(zip(layout.dual_names, layout.blocks))
        states = dict(zip(layout.state_names, layout.blocks))
        for j, entry in enumerate(spec):
            name = entry.get("block", "")
            dual, _, state = name.partition("_")
            if dual not in duals or state not in states:
                raise ConfigError(f"unknown block '{name}'", path=f"{path}[{j}].block")
            rows, cols = duals[dual], states[state]
            shape = (rows.stop - rows.start, cols.stop - cols.start)
            vals = np.asarray(entry.get("values"), dtype=float)
            if vals.size != shape[0] * shape[1]:
                raise ShapeError(
                    f"block '{name}' needs {shape[0] * shape[1]} values, got {vals.size}", path=f"{path}[{j}].values"
                )
            out[rows, cols] += vals.reshape(shape)
        return out
    try:
        return check_square(spec, n, path)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), path=path) from exc


@dataclass(frozen=True)
class MaterialModel:
    """A Prony kernel together with the state layout it acts on."""

    layout: BlockLayout | FlatLayout
    kernel: PronyKernel
    require_symmetric: bool = False

    def __post_init__(self):
        if self.kernel.n != self.layout.n:
            raise ShapeError(f"kernel size {self.kernel.n} does not match layout size {self.layout.n}", path="model")
        if self.require_symmetric and not self.kernel.is_symmetric():
            raise ConfigError("require_symmetric is set but the kernel matrices are not symmetric", path="model")

    @property
    def n(self) -> int:
        return self.layout.n

    def block(self, A: str, B: str, which: str | int = "inf") -> np.ndarray:
        """View of one dual-by-state block, e.g. ``block("sigma", "W")``.

        ``which`` selects ``G_inf`` ("inf"), ``G(0)`` ("zero") or term ``i``.
        """
        rows = dict(zip(self.layout.dual_names, self.layout.blocks))[A]
        cols = dict(zip(self.layout.state_names, self.layout.blocks))[B]
        if which == "inf":
            mat = self.kernel.G_inf
        elif which == "zero":
            mat = self.kernel.G0
        else:
            mat = self.kernel.C[int(which)]
        return mat[rows, cols]

    def to_dict(self) -> dict:
        K = self.kernel
        return {
            "layout": self.layout.to_dict(),
            "G_inf": K.G_inf.reshape(-1).tolist(),
            "terms": [{"tau": float(t), "C": c.reshape(-1).tolist()} for t, c in zip(K.taus, K.C)],
            "require_symmetric": self.require_symmetric,
        }


@dataclass(frozen=True)
class SurfaceModel(MaterialModel):
    """Material model on the surface layout with the surface normal attached."""

    frame: object = None

    def __post_init__(self):
        super().__post_init__()
        if not self.layout.surface:
            object.__setattr__(self, "layout", _as_surface(self.layout))
        if self.frame is None:
            from .surface import SurfaceFrame

            object.__setattr__(self, "frame", SurfaceFrame(np.array([0.0, 0.0, 1.0])))


def _as_surface(layout):
    if isinstance(layout, BlockLayout):
        return BlockLayout(layout.k, surface=True)
    return FlatLayout(layout.n, surface=True)


def model_from_dict(spec: dict, layout=None, surface: bool = False, path: str = "model") -> MaterialModel:
    """Build a model from its JSON form.

    Matrices are flat ``n*n`` lists, nested ``n x n`` lists, ``{"identity": c}``
    or lists of block entries ``{"block": "sigma_W", "values": [...]}``.
    """
    if not isinstance(spec, dict):
        raise ConfigError("model must be a JSON object", path=path)
    if layout is None:
        if "layout" not in spec:
            raise ConfigError("model needs a layout", path=f"{path}.layout")
        layout = layout_from_dict(spec["layout"])
    if surface:
        layout = _as_surface(layout)
    if "G_inf" not in spec:
        raise ConfigError("model needs G_inf", path=f"{path}.G_inf")
    G_inf = _parse_matrix(spec["G_inf"], layout, f"{path}.G_inf")
    terms = spec.get("terms", [])
    if not isinstance(terms, list):
        raise ConfigError("terms must be a list", path=f"{path}.terms")
    taus, Cs = [], []
    for j, term in enumerate(terms):
        if "tau" not in term or "C" not in term:
            raise ConfigError("each term needs 'tau' and 'C'", path=f"{path}.terms[{j}]")
        tau = float(term["tau"])
        if not tau > 0:
            raise DomainError("relaxation times must be > 0", path=f"{path}.terms[{j}].tau")
        taus.append(tau)
        Cs.append(_parse_matrix(term["C"], layout, f"{path}.terms[{j}].C"))
    kernel = PronyKernel(G_inf, np.array(taus), np.array(Cs) if Cs else np.zeros((0, layout.n, layout.n)))
    sym = bool(spec.get("require_symmetric", False))
    if surface:
        from .surface import SurfaceFrame

        frame = SurfaceFrame(spec.get("normal", [0.0, 0.0, 1.0]))
        return SurfaceModel(layout, kernel, sym, frame)
    return MaterialModel(layout, kernel, sym)


@dataclass(frozen=True)
class DissipativityVerdict:
    """Outcome of :func:`check_dissipative`.

    ``violation`` is False for the explicit verdict "no violation found",
    which is inconclusive rather than a proof of dissipativity.
    """

    violation: bool
    history: History | None
    w_value: float
    restarts: int

    @property
    def verdict(self) -> str:
        return "violation" if self.violation else "no_violation_found"


def _random_grid(rng: np.random.Generator, K: PronyKernel) -> np.ndarray:
    m = int(rng.integers(3, 9))
    scales = np.exp(rng.uniform(np.log(0.05 * K.tau_min), np.log(3 * K.tau_max), size=m - 1))
    steps = rng.exponential(scales)
    return np.concatenate([[0.0], np.cumsum(np.maximum(steps, 1e-3 * K.tau_min))])


def check_dissipative(M, search_budget: int = 64, seed=0, tol_diss: float = 1e-9) -> DissipativityVerdict:
    """Search for a history with vanishing limit and negative work.

    On a fixed grid the work of a unit-norm history with ``H(inf) = 0`` is a
    quadratic form in its nodal values, so each restart minimizes it exactly
    by an eigen-decomposition; restarts draw random grids.
    """
    K = _kernel_of(M)
    rng = check_rng(seed)
    n = K.n
    best = (np.inf, None)
    restarts = max(1, int(search_budget))
    for r in range(restarts):
        if r == 0:
            grid = np.concatenate([[0.0], np.geomspace(0.02 * K.tau_min, 8 * K.tau_max, 12)])
        else:
            grid = _random_grid(rng, K)
        base = np.zeros((grid.size, n))
        free = np.arange(grid.size - 1)
        _, _, A = work_form(grid, base, free, K.G0, K.C, K.taus)
        lam, vec = np.linalg.eigh(0.5 * A)
        if lam[0] < best[0]:
            values = np.vstack([vec[:, 0].reshape(free.size, n), np.zeros((1, n))])
            best = (float(lam[0]), History(grid, values))
        if best[0] < -tol_diss:
            return DissipativityVerdict(True, best[1], best[0], r + 1)
    return DissipativityVerdict(False, None, best[0], restarts)
