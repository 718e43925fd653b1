"""Periodic lattice geometry, stencil operators and discrete norms.

Integrals use the unit measure of the torus (each node weighs ``1/N``)
while derivatives use the physical spacing ``h = length / n``.  The gradient
is a forward difference so that, with the 3-point Laplacian,

    sum(f * laplacian(f)) == -sum(gradient_sq(f))

holds exactly up to roundoff.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels

DEFAULT_POINT_CAP = 2**24
NORM_EXPONENTS = (1, 2, 3, 4, 6)


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: tuple[int, ...]
    length: tuple[float, ...]
    point_cap: int = DEFAULT_POINT_CAP

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = tuple(int(x) for x in self.n)
        length = tuple(float(x) for x in self.length)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)
        if len(n) != self.dim or len(length) != self.dim:
            raise ValueError(f"n and length need {self.dim} entries, got {n} and {length}")
        if any(x < 4 for x in n):
            raise ValueError(f"each n must be >= 4, got {n}")
        if any(not (x > 0 and np.isfinite(x)) for x in length):
            raise ValueError(f"each length must be > 0, got {length}")
        if self.npoints > self.point_cap:
            raise ValueError(f"{self.npoints} points exceeds the cap of {self.point_cap}")

    @classmethod
    def uniform(cls, dim: int, n: int, length: float = 1.0) -> "GridSpec":
        return cls(dim, (n,) * dim, (length,) * dim)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def npoints(self) -> int:
        return int(np.prod(self.n))

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.length, self.n))

    @property
    def cell_volume(self) -> float:
        return 1.0 / self.npoints

    @property
    def inv_h(self) -> tuple[float, ...]:
        return tuple(1.0 / h for h in self.h)

    @property
    def inv_h2(self) -> tuple[float, ...]:
        return tuple(1.0 / (h * h) for h in self.h)

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable node coordinates per axis."""
        out = []
        for axis, (n, L) in enumerate(zip(self.n, self.length)):
            shape = [1] * self.dim
            shape[axis] = n
            out.append((np.arange(n) * (L / n)).reshape(shape))
        return out

    @cached_property
    def stencil_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of :func:`laplacian` on the ``rfftn`` mode lattice."""
        lam = np.zeros(self.n[:-1] + (self.n[-1] // 2 + 1,))
        for axis, (n, h) in enumerate(zip(self.n, self.h)):
            m = np.arange(n // 2 + 1) if axis == self.dim - 1 else np.arange(n)
            ev = -(2.0 / (h * h)) * (1.0 - np.cos(2.0 * np.pi * m / n))
            shape = [1] * self.dim
            shape[axis] = ev.size
            lam = lam + ev.reshape(shape)
        return lam


def _check(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid {grid.shape}")
    return f


def integrate(f, grid: GridSpec) -> float:
    """Discrete integral over the unit-measure torus."""
    return float(_check(f, grid).sum() * grid.cell_volume)


def laplacian(f, grid: GridSpec) -> np.ndarray:
    return kernels.laplacian(_check(f, grid), grid.inv_h2)


def gradient_sq(f, grid: GridSpec) -> np.ndarray:
    """Nodewise ``sum_axis ((f[i+1] - f[i]) / h)**2`` with periodic wrap."""
    return kernels.gradient_sq(_check(f, grid), grid.inv_h)


def gradient_sq_backward(f, grid: GridSpec) -> np.ndarray:
    """Backward-difference twin of :func:`gradient_sq`."""
    return kernels.gradient_sq(_check(f, grid), grid.inv_h, backward=True)


def forward_difference(f, grid: GridSpec, axis: int) -> np.ndarray:
    f = _check(f, grid)
    return (np.roll(f, -1, axis) - f) * grid.inv_h[axis]


def lp_norm(f, grid: GridSpec, p: int) -> float:
    if p not in NORM_EXPONENTS:
        raise ValueError(f"norm exponent must be one of {NORM_EXPONENTS}, got {p}")
    a = np.abs(_check(f, grid))
    return float((np.sum(a**p) * grid.cell_volume) ** (1.0 / p))


def l2_norm_sq(f, grid: GridSpec) -> float:
    f = _check(f, grid)
    return float(np.sum(f * f) * grid.cell_volume)


def h1_norm_sq(f, grid: GridSpec) -> float:
    """``|f|_{L2}^2 + integral of gradient_sq(f)``."""
    f = _check(f, grid)
    return l2_norm_sq(f, grid) + float(np.sum(gradient_sq(f, grid)) * grid.cell_volume)


def grad_h1_norm_sq(f, grid: GridSpec) -> float:
    """H1 norm squared of the gradient, summed over the difference directions.

    Built from forward differences of forward differences, which makes
    ``d/dt |grad f|^2 = -2 |laplacian f|^2`` hold exactly for the discrete
    heat flow.
    """
    return sum(h1_norm_sq(forward_difference(f, grid, a), grid) for a in range(grid.dim))
