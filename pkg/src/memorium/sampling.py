"""Random models, histories and processes for sweeps and property checks."""

from __future__ import annotations

import numpy as np

from ._validation import check_rng
from .history import History, Process
from .kernels import MaterialModel, PronyKernel
from .statespace import BlockLayout

__all__ = ["random_spd", "random_model", "random_history", "random_process"]


def random_spd(rng, n: int, scale: float = 1.0, rank: int | None = None) -> np.ndarray:
    """Random symmetric positive semidefinite matrix with unit-order entries."""
    rank = n if rank is None else rank
    B = rng.normal(size=(n, rank)) / np.sqrt(rank)
    return scale * (B @ B.T)


def random_model(
    seed, layout=None, terms: int = 2, symmetric: bool = True, block_diagonal: bool = False, surface: bool = False
) -> MaterialModel:
    """A dissipative-by-construction model: PSD ``G_inf`` and PSD Prony matrices.

    With ``symmetric=False`` the matrices are drawn without structure, which
    is useful for checks that do not rely on dissipativity.
    """
    rng = check_rng(seed)
    layout = layout or BlockLayout(1, surface=surface)
    n = layout.n
    taus = np.sort(np.exp(rng.uniform(np.log(0.3), np.log(5.0), terms)))

    def draw():
        if not symmetric:
            return rng.normal(size=(n, n))
        if not block_diagonal:
            return random_spd(rng, n)
        out = np.zeros((n, n))
        for b in layout.blocks:
            size = b.stop - b.start
            out[b, b] = random_spd(rng, size)
        return out

    G_inf = draw()
    C = np.array([draw() for _ in range(terms)])
    if surface:
        from .kernels import SurfaceModel

        return SurfaceModel(layout, PronyKernel(G_inf, taus, C), symmetric)
    return MaterialModel(layout, PronyKernel(G_inf, taus, C), symmetric)


def random_history(seed, n: int, nodes: int = 8, span: float = 10.0, smooth: bool = False, amplitude: float = 1.0) -> History:
    """Piecewise-linear history with random lags, values and a constant tail.

    ``smooth`` samples a random sum of decaying sinusoids on a fine uniform
    grid instead.
    """
    rng = check_rng(seed)
    if smooth:
        grid = np.linspace(0.0, span, max(nodes, 2))
        rates = rng.uniform(0.1, 1.0, (3, n))
        freqs = rng.uniform(0.2, 2.0, (3, n))
        amps = amplitude * rng.normal(size=(3, n))
        phases = rng.uniform(0, 2 * np.pi, (3, n))
        s = grid[:, None, None]
        vals = np.sum(amps * np.exp(-rates * s) * np.cos(freqs * s + phases), axis=1)
        return History(grid, vals)
    steps = rng.exponential(span / nodes, nodes - 1) + 1e-3
    grid = np.concatenate([[0.0], np.cumsum(steps)])
    return History(grid, amplitude * rng.normal(size=(nodes, n)))


def random_process(seed, end, nodes: int = 4, duration: float = 3.0, amplitude: float = 1.0) -> Process:
    """Random process that terminates at ``end`` (the present of the history it prolongs)."""
    rng = check_rng(seed)
    end = np.asarray(end, dtype=float)
    steps = rng.uniform(0.2, 1.0, nodes)
    lags = duration * np.concatenate([[0.0], np.cumsum(steps)])[:-1] / steps.sum()
    values = end + amplitude * rng.normal(size=(nodes, end.size))
    return Process(duration, lags, values, end)
