"""Parameters, state containers, mass-action rates and constant equilibria.

Species are always ordered ``(u, v, p, q)``.  A lattice quadruple is stored
as one ``float64`` array of shape ``(4, *grid.shape)`` so the pointwise
kernels can sweep it in a single pass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .grid import GridSpec

SPECIES = ("u", "v", "p", "q")
RATE_NAMES = ("k0p", "k0m", "k1p", "k1m", "k2p", "k2m")
DIFFUSIVITY_NAMES = ("du", "dv", "dp_", "dq")


class DomainError(ValueError):
    """Input outside the domain of a formula (negative or non-finite)."""


@dataclass(frozen=True)
class Parameters:
    """Rate constants ``k_i^+/k_i^-``, diffusivities and total mass ``Z0``."""

    k0p: float = 1.0
    k0m: float = 1.0
    k1p: float = 1.0
    k1m: float = 1.0
    k2p: float = 1.0
    k2m: float = 1.0
    du: float = 1.0
    dv: float = 1.0
    dp_: float = 1.0
    dq: float = 1.0
    z0: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"{f.name} must be finite, got {value!r}")
            if f.name == "z0":
                if value <= 0:
                    raise ValueError(f"z0 must be > 0, got {value!r}")
            elif value < 0:
                raise ValueError(f"{f.name} must be >= 0, got {value!r}")

    @property
    def rates(self) -> tuple[float, ...]:
        return tuple(getattr(self, n) for n in RATE_NAMES)

    @property
    def diffusivities(self) -> tuple[float, float, float, float]:
        return (self.du, self.dv, self.dp_, self.dq)

    @property
    def reversible(self) -> bool:
        return all(k > 0 for k in self.rates)

    def with_(self, **changes) -> "Parameters":
        return replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Equilibrium:
    ubar: float
    vbar: float
    pbar: float
    qbar: float

    def as_array(self) -> np.ndarray:
        return np.array([self.ubar, self.vbar, self.pbar, self.qbar])

    def fields(self, shape: tuple[int, ...]) -> np.ndarray:
        """Uniform lattice quadruple holding this equilibrium."""
        out = np.empty((4,) + tuple(shape))
        for i, c in enumerate(self.as_array()):
            out[i] = c
        return out


@dataclass
class State:
    """A lattice quadruple at a given time."""

    time: float
    fields: np.ndarray

    def __post_init__(self):
        self.fields = np.ascontiguousarray(self.fields, dtype=np.float64)
        if self.fields.ndim < 2 or self.fields.shape[0] != 4:
            raise ValueError(f"fields must have shape (4, ...), got {self.fields.shape}")
        if self.time < 0:
            raise ValueError(f"time must be >= 0, got {self.time}")

    u = property(lambda self: self.fields[0])
    v = property(lambda self: self.fields[1])
    p = property(lambda self: self.fields[2])
    q = property(lambda self: self.fields[3])

    def copy(self) -> "State":
        return State(self.time, self.fields.copy())


def reaction_rates(u, v, p, q, params: Parameters):
    """Mass-action rates ``(r0, r1, r2)`` of the three reversible reactions.

    Works on scalars or broadcastable arrays.  Negative or non-finite
    concentrations raise :class:`DomainError`.
    """
    for name, c in zip(SPECIES, (u, v, p, q)):
        a = np.asarray(c, dtype=float)
        if not np.all(np.isfinite(a)):
            raise DomainError(f"non-finite concentration {name}")
        if np.any(a < 0):
            raise DomainError(f"negative concentration {name}")
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    r0 = k0p * u - k0m * q
    r1 = k1p * u * v * v - k1m * v * v * v
    r2 = k2p * v - k2m * p
    return r0, r1, r2


def detailed_balance_equilibrium(params: Parameters) -> Equilibrium:
    """Strictly positive constant solution on the unit torus.

    Each reaction is individually balanced and the components sum to ``Z0``.
    """
    if not params.reversible:
        raise DomainError("detailed-balance equilibrium undefined: all six rate constants must be > 0")
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    a = k0m * k1m * k2m
    b = k0m * k1p * k2m
    c = k0m * k1p * k2p
    d = k0p * k1m * k2m
    K = a + b + c + d
    z = params.z0
    return Equilibrium(a / K * z, b / K * z, c / K * z, d / K * z)


def trivial_equilibrium(params: Parameters) -> Equilibrium:
    """Constant solution with ``v = p = 0`` (only the U/Q exchange balanced)."""
    s = params.k0p + params.k0m
    if s <= 0:
        raise DomainError("trivial equilibrium undefined: k0p + k0m must be > 0")
    return Equilibrium(params.k0m / s * params.z0, 0.0, 0.0, params.k0p / s * params.z0)


def total_mass(state: State, grid: "GridSpec") -> float:
    """Discrete integral of ``u + v + p + q`` over the (unit-measure) torus."""
    return float(state.fields.sum() * grid.cell_volume)
