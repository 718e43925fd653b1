"""Well-mixed kinetics and checks of the variational structure of the reactions.

In a spatially uniform state the system reduces to four ODEs.  Writing the
concentrations through the reaction extents ``R0, R1, R2`` (``dR_i/dt = r_i``)
turns the kinetics into a generalized gradient flow of the entropy free
energy; the checks below verify that structure numerically.

Scalars are handled as plain Python floats: the ODE has four unknowns and
the long runs (1e5 steps) are dominated by per-call overhead otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DomainError, Equilibrium, Parameters, detailed_balance_equilibrium, reaction_rates
from .stepper import BLOWUP_FACTOR, BlowUpError
from .thermo import flux_log_term

Vec = tuple[float, ...]


def wellmixed_rhs(c4: Sequence[float], params: Parameters) -> Vec:
    """Tendencies ``(-r1 - r0, r1 - r2, r2, r0)`` of a uniform state."""
    r0, r1, r2 = reaction_rates(*c4, params)
    return (-r1 - r0, r1 - r2, r2, r0)


def _rates_fast(c, k):
    k0p, k0m, k1p, k1m, k2p, k2m = k
    u, v, p, q = c
    return (k0p * u - k0m * q, k1p * u * v * v - k1m * v * v * v, k2p * v - k2m * p)


def rk4_step(f: Callable[[float, Vec], Vec], t: float, y: Vec, dt: float) -> Vec:
    """One classical Runge-Kutta step for a small tuple-valued ODE."""
    h = 0.5 * dt
    k1 = f(t, y)
    k2 = f(t + h, tuple(a + h * b for a, b in zip(y, k1)))
    k3 = f(t + h, tuple(a + h * b for a, b in zip(y, k2)))
    k4 = f(t + dt, tuple(a + dt * b for a, b in zip(y, k3)))
    return tuple(
        a + (dt / 6.0) * (((b1 + 2.0 * b2) + 2.0 * b3) + b4)
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
    )


@dataclass
class ReactionTrajectories:
    times: np.ndarray
    c: np.ndarray  # (S, 4)
    R: np.ndarray  # (S, 3)


def integrate_trajectories(
    c0: Sequence[float], params: Parameters, T: float, dt: float, sample_every: int = 1
) -> ReactionTrajectories:
    """Co-integrate the concentrations and the reaction extents with RK4."""
    if T < 0 or not dt > 0:
        raise ValueError("integrate_trajectories needs T >= 0 and dt > 0")
    c0 = tuple(float(x) for x in c0)
    if any(x < 0 for x in c0):
        raise DomainError("initial concentrations must be nonnegative")
    k = params.rates
    threshold = BLOWUP_FACTOR * max(params.z0, sum(c0))

    def f(t, y):
        r0, r1, r2 = _rates_fast(y[:4], k)
        return (-r1 - r0, r1 - r2, r2, r0, r0, r1, r2)

    y = c0 + (0.0, 0.0, 0.0)
    n = max(0, math.ceil(T / dt - 1e-9))
    times, out = [0.0], [y]
    for i in range(1, n + 1):
        h = T - (i - 1) * dt if i == n else dt
        y = rk4_step(f, (i - 1) * dt, y, h)
        if not all(math.isfinite(x) for x in y) or max(y[:4]) > threshold:
            raise BlowUpError(i * dt, max(y[:4]), threshold)
        if i % sample_every == 0 or i == n:
            times.append(T if i == n else i * dt)
            out.append(y)
    arr = np.array(out)
    return ReactionTrajectories(np.array(times), arr[:, :4], arr[:, 4:])


def reconstruct_concentrations(c0: Sequence[float], R: Sequence[float]) -> np.ndarray:
    """Concentrations implied by the reaction extents (works on stacked ``R``)."""
    c0 = np.asarray(c0, dtype=float)
    R = np.asarray(R, dtype=float)
    R0, R1, R2 = R[..., 0], R[..., 1], R[..., 2]
    return np.stack([c0[0] - R1 - R0, c0[1] + R1 - R2, c0[2] + R2, c0[3] + R0], axis=-1)


def wellmixed_free_energy(c4: Sequence[float], eq: Equilibrium) -> float:
    total = 0.0
    for c, cbar in zip(c4, eq.as_array()):
        if c <= 0:
            raise DomainError("free energy needs strictly positive concentrations")
        total += c * (math.log(c / cbar) - 1.0)
    return total


# d c / d R_i for i = 0, 1, 2
STOICHIOMETRY = np.array([
    [-1.0, 0.0, 0.0, 1.0],
    [-1.0, 1.0, 0.0, 0.0],
    [0.0, -1.0, 1.0, 0.0],
])


def _fluxes(c4, params):
    u, v, p, q = c4
    k0p, k0m, k1p, k1m, k2p, k2m = params.rates
    return ((k0p * u, k0m * q), (k1p * u * v * v, k1m * v * v * v), (k2p * v, k2m * p))


def variational_derivative_check(
    c4: Sequence[float], params: Parameters, eq: Equilibrium | None = None, delta: float | None = None
) -> np.ndarray:
    """``|dF/dR_i + ln(forward_i / backward_i)|`` for ``i = 0, 1, 2``.

    ``dF/dR_i`` is a centered finite difference of the well-mixed free
    energy along the reaction direction ``i`` with step ``delta``
    (default ``1e-6 * Z0`` where ``Z0`` is the state's total mass).  If a
    displaced state leaves the positive orthant the step is shrunk once.
    """
    c = np.asarray(c4, dtype=float)
    if np.any(c <= 0):
        raise DomainError("variational derivative check needs strictly positive concentrations")
    if not params.reversible:
        raise DomainError("variational derivative check needs reversible kinetics")
    eq = eq or detailed_balance_equilibrium(params.with_(z0=float(c.sum())))
    delta = 1e-6 * float(c.sum()) if delta is None else delta
    out = np.empty(3)
    fluxes = _fluxes(c, params)
    for i, s in enumerate(STOICHIOMETRY):
        d = delta
        for attempt in range(2):
            lo, hi = c - d * s, c + d * s
            if np.all(lo > 0) and np.all(hi > 0):
                break
            if attempt == 1:
                raise DomainError(f"finite-difference step leaves the positive orthant along R{i}")
            d = 0.5 * float(np.min(c))
        fd = (wellmixed_free_energy(hi, eq) - wellmixed_free_energy(lo, eq)) / (2.0 * d)
        a, b = fluxes[i]
        out[i] = abs(fd + math.log(a / b))
    return out


def _sub_error(a: float, b: float, diff: float) -> float:
    """Exact rounding error of ``diff = fl(a - b)`` (TwoSum)."""
    bv = diff - a
    av = diff - bv
    return (a - av) + (-b - bv)


def dissipation_identity_check(c4: Sequence[float], params: Parameters) -> np.ndarray:
    """Relative gap between the two forms of each reaction dissipation.

    Form one is ``Rdot * ln(Rdot / backward + 1)`` with ``Rdot = r_i`` from
    the mass-action rates; form two is ``(forward - backward) ln(forward /
    backward)`` as evaluated by the reaction-dissipation integrand.
    Returns ``|one - two| / max(|two|, tiny)`` per reaction.
    """
    c = tuple(float(x) for x in c4)
    if any(x <= 0 for x in c):
        raise DomainError("dissipation identity check needs strictly positive concentrations")
    rates = reaction_rates(*c, params)
    out = np.empty(3)
    for i, (rdot, (a, b)) in enumerate(zip(rates, _fluxes(c, params))):
        if b <= 0:
            raise DomainError(f"zero backward flux in reaction {i}")
        if abs(rdot) < 0.5 * b:
            one = rdot * math.log1p(rdot / b)
        else:
            # 1 + rdot/b cancels when a << b; rebuild rdot + b from rdot and its rounding error
            one = rdot * math.log(math.fsum((b, rdot, _sub_error(a, b, rdot))) / b)
        two = float(flux_log_term(a, b))
        out[i] = abs(one - two) / max(abs(two), 1e-300)
    return out
