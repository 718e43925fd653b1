"""Right-hand sides of the model variants and Strang-split time stepping.

A Strang step is half a diffusion step, one RK4 step of the pointwise
kinetics, and another half diffusion step.  Diffusion is solved in the
discrete Fourier basis of the 3-point Laplacian, either exactly
(``spectral``) or with the trapezoidal rule (``crank-nicolson``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft

from . import kernels
from .core import DomainError, Equilibrium, Parameters, State, detailed_balance_equilibrium
from .diagnostics import DiagnosticsRecord, diagnose
from .grid import GridSpec, laplacian

log = logging.getLogger(__name__)

BLOWUP_FACTOR = 1e6
SCHEMES = ("strang", "euler")
DIFFUSION_SOLVERS = ("spectral", "crank-nicolson")


class NumericalAbort(RuntimeError):
    """The integration cannot continue (blow-up or non-finite values)."""


class BlowUpError(NumericalAbort):
    def __init__(self, time: float, value: float, threshold: float):
        super().__init__(
            f"finite-time blow-up suspected at t={time:.6g}: max concentration {value:.6g} "
            f"exceeds {threshold:.6g}; existence is only guaranteed locally in time"
        )
        self.time = time
        self.value = value


class StepFailure(NumericalAbort):
    pass


@dataclass(frozen=True)
class ModelVariant:
    """Which kinetics to integrate.

    ``ReGS`` uses the parameters as given; ``ReGSEps`` overrides
    ``k1m = k2m = eps``; ``IrGS`` is ``ReGSEps`` with ``eps = 0``;
    ``ReducedGS`` replaces the U/Q exchange by the feed ``k0p (feed - u)``,
    freezes ``q`` and switches off diffusion of ``p`` and ``q``.
    """

    tag: str = "ReGS"
    eps: float | None = None
    feed: float | None = None

    TAGS = ("ReGS", "ReGSEps", "IrGS", "ReducedGS")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"unknown model variant {self.tag!r}")
        if self.tag == "ReGSEps":
            if self.eps is None or not self.eps >= 0:
                raise ValueError("ReGSEps needs eps >= 0")
        elif self.eps is not None:
            raise ValueError("epsilon requires variant ReGSEps")
        if self.tag == "ReducedGS":
            if self.feed is None or not self.feed >= 0:
                raise ValueError("ReducedGS needs feed >= 0")
        elif self.feed is not None:
            raise ValueError("feed requires variant ReducedGS")

    @classmethod
    def regs(cls):
        return cls("ReGS")

    @classmethod
    def regs_eps(cls, eps: float):
        return cls("ReGSEps", eps=float(eps))

    @classmethod
    def irgs(cls):
        return cls("IrGS")

    @classmethod
    def reduced(cls, feed: float):
        return cls("ReducedGS", feed=float(feed))

    def effective(self, params: Parameters) -> Parameters:
        if self.tag == "ReGS":
            return params
        if self.tag == "ReGSEps":
            return params.with_(k1m=self.eps, k2m=self.eps)
        if self.tag == "IrGS":
            return params.with_(k1m=0.0, k2m=0.0)
        return params.with_(k1m=0.0, k2m=0.0, dp_=0.0, dq=0.0)

    @property
    def kernel_feed(self) -> float:
        return self.feed if self.tag == "ReducedGS" else -1.0

    def __str__(self):
        if self.tag == "ReGSEps":
            return f"ReGSEps({self.eps:g})"
        if self.tag == "ReducedGS":
            return f"ReducedGS({self.feed:g})"
        return self.tag


@dataclass(frozen=True)
class StepConfig:
    dt: float
    t_end: float
    scheme: str = "strang"
    diffusion_solver: str = "spectral"
    sample_every: int = 1
    positivity_floor: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be >= 0, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.diffusion_solver not in DIFFUSION_SOLVERS:
            raise ValueError(f"diffusion_solver must be one of {DIFFUSION_SOLVERS}, got {self.diffusion_solver!r}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError(f"sample_every must be an integer >= 1, got {self.sample_every}")
        if not self.positivity_floor >= 0:
            raise ValueError(f"positivity_floor must be >= 0, got {self.positivity_floor}")


def rhs(state: State, grid: GridSpec, params: Parameters, variant: ModelVariant) -> np.ndarray:
    """Tendency quadruple: diffusion plus the variant's reaction terms."""
    if not isinstance(variant, ModelVariant):
        raise TypeError(f"unknown variant {variant!r}")
    if np.any(state.fields < 0):
        raise DomainError("rhs needs nonnegative concentrations")
    eff = variant.effective(params)
    out = kernels.reaction_tendency(state.fields, eff.rates, variant.kernel_feed)
    for i, d in enumerate(eff.diffusivities):
        if d:
            out[i] += d * laplacian(state.fields[i], grid)
    return out


class Stepper:
    """Time stepper bound to one grid, parameter set, variant and config.

    Caches the Fourier multipliers of the diffusion substeps.
    """

    def __init__(self, grid: GridSpec, params: Parameters, variant: ModelVariant, cfg: StepConfig):
        self.grid = grid
        self.params = params
        self.variant = variant
        self.cfg = cfg
        self.eff = variant.effective(params)
        self._axes = tuple(range(1, grid.dim + 1))
        self._multipliers: dict[float, np.ndarray] = {}
        self.clamp_events = 0

    def _multiplier(self, dt: float) -> np.ndarray:
        m = self._multipliers.get(dt)
        if m is None:
            lam = self.grid.stencil_eigenvalues
            m = np.empty((4,) + lam.shape)
            for i, d in enumerate(self.eff.diffusivities):
                z = dt * d * lam
                if self.cfg.diffusion_solver == "spectral":
                    m[i] = np.exp(z)
                else:
                    m[i] = (1.0 + 0.5 * z) / (1.0 - 0.5 * z)
            self._multipliers[dt] = m
        return m

    def diffusion(self, fields: np.ndarray, dt: float) -> np.ndarray:
        active = [i for i, d in enumerate(self.eff.diffusivities) if d > 0]
        out = fields.copy()
        if not active:
            return out
        m = self._multiplier(dt)
        spec = scipy.fft.rfftn(fields[active], axes=self._axes)
        spec *= m[active]
        res = scipy.fft.irfftn(spec, s=self.grid.shape, axes=self._axes)
        if not np.all(np.isfinite(res)):
            raise StepFailure("diffusion solve produced non-finite values")
        out[active] = res
        return out

    def reaction(self, fields: np.ndarray, dt: float) -> np.ndarray:
        new, clamps, bad = kernels.reaction_rk4(
            fields, self.eff.rates, dt, self.cfg.positivity_floor, self.variant.kernel_feed
        )
        if bad >= 0:
            idx = np.unravel_index(bad, self.grid.shape)
            raise StepFailure(f"non-finite value in reaction substep at node {tuple(int(i) for i in idx)}")
        self.clamp_events += clamps
        return new

    def step(self, state: State, dt: float | None = None) -> State:
        dt = self.cfg.dt if dt is None else dt
        if self.cfg.scheme == "strang":
            f = self.diffusion(state.fields, 0.5 * dt)
            f = self.reaction(f, dt)
            f = self.diffusion(f, 0.5 * dt)
        else:
            f = state.fields + dt * rhs(state, self.grid, self.params, self.variant)
            if not np.all(np.isfinite(f)):
                raise StepFailure("explicit Euler step produced non-finite values")
        self.clamp_events += kernels.clamp(f, self.cfg.positivity_floor)
        return State(state.time + dt, f)


def reaction_substep(fields, params, variant, dt, positivity_floor=1e-12):
    """RK4 step of the pointwise kinetics; returns ``(fields, clamp_events)``."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    eff = variant.effective(params)
    new, clamps, bad = kernels.reaction_rk4(fields, eff.rates, dt, positivity_floor, variant.kernel_feed)
    if bad >= 0:
        raise StepFailure(f"non-finite value in reaction substep at flat node {bad}")
    return new, clamps


def diffusion_substep(fields, grid, params, dt, solver="spectral", variant=None):
    if not dt > 0:
        raise ValueError("dt must be > 0")
    variant = variant or ModelVariant.regs()
    st = Stepper(grid, params, variant, StepConfig(dt=dt, t_end=dt, diffusion_solver=solver))
    return st.diffusion(np.ascontiguousarray(fields, dtype=np.float64), dt)


def step_strang(state, grid, params, variant, cfg) -> tuple[State, int]:
    """One step of ``cfg.scheme``; returns the new state and its clamp count."""
    st = Stepper(grid, params, variant, cfg)
    new = st.step(state)
    return new, st.clamp_events


@dataclass
class IntegrationResult:
    state: State
    clamp_events: int
    records: list[DiagnosticsRecord] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)


def integrate(
    initial: State,
    grid: GridSpec,
    params: Parameters,
    variant: ModelVariant,
    cfg: StepConfig,
    sink: Callable[[DiagnosticsRecord], None] | None = None,
    eq: Equilibrium | None = None,
    keep_states: bool = False,
    diagnostics: bool = True,
    on_step: Callable[[int, State, int], None] | None = None,
    clamp_events: int = 0,
    sample_initial: bool = True,
) -> IntegrationResult:
    """Advance ``initial`` to ``cfg.t_end``.

    Every ``cfg.sample_every`` steps (counted from ``t = 0``, so restarts
    line up) and at the final time a :class:`DiagnosticsRecord` is built and
    passed to ``sink``.  ``eq`` enables the global functionals; the entropy
    diagnostics use the detailed-balance equilibrium of the effective
    parameters whenever it exists.  With ``keep_states`` the sampled fields
    are kept on the result.  ``clamp_events`` seeds the cumulative clamp
    counter when resuming from a checkpoint; pass ``sample_initial=False``
    there so the checkpoint sample is not emitted twice.
    """
    if initial.fields.shape[1:] != grid.shape:
        raise ValueError("initial state does not match the grid")
    if np.any(initial.fields < 0):
        raise DomainError("initial concentrations must be nonnegative")
    st = Stepper(grid, params, variant, cfg)
    st.clamp_events = int(clamp_events)
    entropy_eq = detailed_balance_equilibrium(st.eff) if st.eff.reversible else None
    threshold = BLOWUP_FACTOR * params.z0
    dt = cfg.dt
    i = int(round(initial.time / dt))
    span = cfg.t_end - initial.time
    if span < -1e-12 * max(1.0, cfg.t_end):
        raise ValueError("initial time is past t_end")
    n_steps = max(0, math.ceil(span / dt - 1e-9))
    result = IntegrationResult(state=initial, clamp_events=0)

    def sample(state):
        if diagnostics:
            rec = diagnose(state, grid, st.eff, entropy_eq, eq, st.clamp_events)
            result.records.append(rec)
            if sink is not None:
                sink(rec)
        if keep_states:
            result.times.append(state.time)
            result.states.append(state.fields.copy())

    state = initial
    if sample_initial and (i % cfg.sample_every == 0 or n_steps == 0):
        sample(state)
    for k in range(n_steps):
        last = k == n_steps - 1
        h = cfg.t_end - state.time if last else dt
        if abs(h - dt) <= 1e-9 * dt:
            h = dt
        new = st.step(state, h)
        i += 1
        new.time = cfg.t_end if last else i * dt
        peak = float(new.fields.max())
        if peak > threshold:
            raise BlowUpError(new.time, peak, threshold)
        state = new
        if on_step is not None:
            on_step(i, state, st.clamp_events)
        if i % cfg.sample_every == 0 or last:
            sample(state)
    result.state = state
    result.clamp_events = st.clamp_events
    return result
