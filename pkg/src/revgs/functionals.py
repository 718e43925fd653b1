"""Local and global energy/dissipation functionals and the energy-inequality monitors.

The local pair ``(E_L, D_L)`` controls short-time existence; the global pair
``(E_g, D_g)`` measures the perturbation from the detailed-balance
equilibrium with reaction-weighted H1 norms.  All norms are the discrete ones
of :mod:`revgs.grid`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Equilibrium, Parameters, State
from .grid import GridSpec, forward_difference, grad_h1_norm_sq, h1_norm_sq, l2_norm_sq, laplacian


@dataclass(frozen=True)
class LocalFunctionals:
    E_L: float
    D_L: float


@dataclass(frozen=True)
class GlobalFunctionals:
    E_g: float
    D_g: float
    C_g: float


@dataclass(frozen=True)
class MonitorReport:
    mode: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    satisfied_fraction: float


def perturbation(state: State, eq: Equilibrium) -> np.ndarray:
    """Tilde fields ``state - equilibrium`` (may be negative)."""
    bars = eq.as_array().reshape((4,) + (1,) * (state.fields.ndim - 1))
    return state.fields - bars


def perturbation_tendency(tilde: np.ndarray, params: Parameters, eq: Equilibrium, grid: GridSpec) -> np.ndarray:
    """Right-hand side of the system written for the perturbation.

    Expanded around the equilibrium using ``k0p ubar = k0m qbar``,
    ``k1p ubar = k1m vbar`` and ``k2p vbar = k2m pbar``; used to cross-check
    the stepper's right-hand side.
    """
    u, v, p, q = tilde
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    vb = eq.vbar
    cubic = -k1p * u * v * v + k1m * v**3
    quad = -2 * k1p * vb * u * v + 2 * k1m * vb * v * v
    lin1 = -k1p * vb * vb * u + k1m * vb * vb * v
    out = np.empty_like(tilde)
    out[0] = params.du * laplacian(u, grid) + cubic + quad + lin1 - k0p * u + k0m * q
    out[1] = params.dv * laplacian(v, grid) - cubic - quad - lin1 - k2p * v + k2m * p
    out[2] = params.dp_ * laplacian(p, grid) + k2p * v - k2m * p
    out[3] = params.dq * laplacian(q, grid) + k0p * u - k0m * q
    return out


def local_constant(params: Parameters) -> float:
    """Closed-form constant ``C_L`` of the local energy inequality."""
    if params.du <= 0 or params.dv <= 0:
        raise ValueError("C_L needs du > 0 and dv > 0")
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    return (
        k0m + k0p + k1m + k1p + k2m + k2p
        + 4 * k1p**2 / params.du
        + 9 * k1m**2 / params.du
        + k1p**2 / params.dv
        + 4 * k1p**2 / params.dv
    )


def local_functionals(state: State, params: Parameters, grid: GridSpec) -> LocalFunctionals:
    u, v, p, q = state.fields
    E = sum(h1_norm_sq(c, grid) for c in state.fields)
    du_v = sum(l2_norm_sq(forward_difference(u, grid, a) * v, grid) for a in range(grid.dim))
    D = (
        0.5 * params.du * grad_h1_norm_sq(u, grid)
        + 0.5 * params.dv * grad_h1_norm_sq(v, grid)
        + params.dp_ * grad_h1_norm_sq(p, grid)
        + params.dq * grad_h1_norm_sq(q, grid)
        + params.k1m * h1_norm_sq(v * v, grid)
        + params.k1p * l2_norm_sq(u * v, grid)
        + params.k1p * du_v
        + params.k0p * h1_norm_sq(u, grid)
        + params.k2p * h1_norm_sq(v, grid)
        + params.k2m * h1_norm_sq(p, grid)
        + params.k0m * h1_norm_sq(q, grid)
    )
    return LocalFunctionals(E, D)


def global_constant(params: Parameters, eq: Equilibrium) -> float:
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    vb = eq.vbar
    return 4 * k0p * k1p * k2p + 6 * k0p * k1p * k2p * vb + 4 * k0p * k1m * k2p + 6 * k0p * k1m * k2p * vb


def energy_weights(params: Parameters) -> tuple[float, float, float, float]:
    """Per-species weights of ``E_g``."""
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    return (k0p * k1p * k2p, k0p * k1m * k2p, k0p * k1m * k2m, k0m * k1p * k2p)


def global_functionals(tilde: np.ndarray, params: Parameters, eq: Equilibrium, grid: GridSpec) -> GlobalFunctionals:
    u, v, p, q = tilde
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    w = energy_weights(params)
    vb2 = eq.vbar**2
    E = sum(wi * h1_norm_sq(c, grid) for wi, c in zip(w, tilde))
    D = (
        sum(d * wi * grad_h1_norm_sq(c, grid) for d, wi, c in zip(params.diffusivities, w, tilde) if d * wi)
        + k0p * k2p * vb2 * h1_norm_sq(k1p * u - k1m * v, grid)
        + k1p * k2p * h1_norm_sq(k0p * u - k0m * q, grid)
        + k0p * k1m * vb2 * h1_norm_sq(k2p * v - k2m * p, grid)
    )
    return GlobalFunctionals(E, D, global_constant(params, eq))


def smallness_threshold(params: Parameters, eq: Equilibrium) -> float:
    C = global_constant(params, eq)
    if C <= 0:
        raise ValueError("smallness threshold needs C_g > 0")
    return min(1.0, 1.0 / (64.0 * C * C))


def predicted_lifespan(E_in: float, C_L: float) -> float:
    """Largest ``T`` for which the local energy bound is guaranteed."""
    if E_in <= 0 or C_L <= 0:
        raise ValueError("predicted_lifespan needs positive arguments")
    # ln(sqrt(1 + E^2) / E) == 0.5 * log1p(1 / E^2)
    return 0.5 * math.log1p(1.0 / (E_in * E_in)) / C_L


def _series(records, name):
    return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in records], dtype=float)


def inequality_monitor(
    records: Sequence,
    mode: str,
    params: Parameters,
    eq: Equilibrium | None = None,
    atol: float = 1e-14,
) -> MonitorReport:
    """Check the differential energy inequality along sampled diagnostics.

    ``Local``:  ``dE_L/dt + D_L  <=  C_L (E_L + E_L^3)``.
    ``Global``: ``dE_g/dt / 2 + D_g  <=  C_g (1 + sqrt(E_g)) sqrt(E_g) D_g``.

    Time derivatives are centered differences, so only interior samples are
    reported.  A sample counts as satisfied when ``lhs <= rhs + atol``.
    """
    if len(records) < 3:
        raise ValueError("inequality monitor needs at least 3 samples")
    t = _series(records, "t")
    if mode.lower() == "local":
        E = _series(records, "E_L")
        D = _series(records, "D_L")
        dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
        lhs = dEdt + D[1:-1]
        Ei = E[1:-1]
        rhs = local_constant(params) * (Ei + Ei**3)
        label = "Local"
    elif mode.lower() == "global":
        if eq is None:
            raise ValueError("Global monitor needs the equilibrium")
        E = _series(records, "E_g")
        D = _series(records, "D_g")
        dEdt = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
        lhs = 0.5 * dEdt + D[1:-1]
        sq = np.sqrt(np.maximum(E[1:-1], 0.0))
        rhs = global_constant(params, eq) * (1.0 + sq) * sq * D[1:-1]
        label = "Global"
    else:
        raise ValueError(f"unknown monitor mode {mode!r}")
    if np.any(np.isnan(lhs)) or np.any(np.isnan(rhs)):
        raise ValueError(f"{label} monitor needs its functionals in every sample")
    ok = lhs <= rhs + atol
    return MonitorReport(label, t[1:-1], lhs, rhs, float(np.mean(ok)))
