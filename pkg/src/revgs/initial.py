"""Initial-condition builders.

All builders are deterministic given their ``seed``.
"""
from __future__ import annotations

import numpy as np

from .core import Equilibrium, State
from .grid import GridSpec

PERTURBATION_MODES = ("random", "smooth")


def _unit_noise(grid: GridSpec, rng: np.random.Generator, mode: str, modes: int) -> np.ndarray:
    """Zero-mean field with max-abs 1."""
    if mode == "random":
        xi = rng.standard_normal(grid.shape)
    elif mode == "smooth":
        xi = np.zeros(grid.shape)
        for axis, x in enumerate(grid.coordinates()):
            L = grid.length[axis]
            for m in range(1, modes + 1):
                amp = rng.standard_normal() / m**2
                phase = rng.uniform(0.0, 2.0 * np.pi)
                xi = xi + amp * np.sin(2.0 * np.pi * m * x / L + phase)
    else:
        raise ValueError(f"perturbation mode must be one of {PERTURBATION_MODES}, got {mode!r}")
    xi = xi - xi.mean()
    peak = np.abs(xi).max()
    return xi / peak if peak > 0 else xi


def perturbed_equilibrium(
    grid: GridSpec,
    eq: Equilibrium,
    amplitude: float = 1e-2,
    seed: int = 0,
    mode: str = "random",
    modes: int = 3,
) -> State:
    """``c_bar * (1 + amplitude * xi)`` per species with zero-mean ``xi``.

    The total mass equals that of ``eq`` up to rounding.  ``amplitude`` must
    lie in ``[0, 1]`` so the fields stay nonnegative.
    """
    if not 0.0 <= amplitude <= 1.0:
        raise ValueError(f"amplitude must be in [0, 1], got {amplitude}")
    rng = np.random.default_rng(seed)
    base = eq.as_array()
    f = np.empty((4,) + grid.shape)
    for i in range(4):
        f[i] = base[i] * (1.0 + amplitude * _unit_noise(grid, rng, mode, modes))
    return State(0.0, f)


def seeded_square(
    grid: GridSpec,
    background=(1.0, 0.0, 0.0, 0.0),
    inside=(0.5, 0.25, 0.0, 0.0),
    size: float = 0.2,
    noise: float = 0.01,
    seed: int = 0,
) -> State:
    """Uniform background with a centred box of different values plus noise.

    ``size`` is the box edge as a fraction of each side.  Multiplicative
    noise of relative size ``noise`` is applied to every species.
    """
    if not 0.0 < size <= 1.0:
        raise ValueError(f"size must be in (0, 1], got {size}")
    if noise < 0:
        raise ValueError(f"noise must be >= 0, got {noise}")
    rng = np.random.default_rng(seed)
    mask = np.ones(grid.shape, dtype=bool)
    for axis, x in enumerate(grid.coordinates()):
        L = grid.length[axis]
        mask &= np.abs(x - 0.5 * L) < 0.5 * size * L
    f = np.empty((4,) + grid.shape)
    for i in range(4):
        f[i] = np.where(mask, inside[i], background[i])
        f[i] *= 1.0 + noise * rng.uniform(-1.0, 1.0, grid.shape)
    return State(0.0, np.maximum(f, 0.0))
