"""Reversible-to-irreversible sweep and the slow-fast exchange reduction.

``epsilon_sweep`` runs ``ReGSEps(eps)`` for a list of ``eps`` plus the
irreversible system from one shared initial state and measures the gap in
``sup_t L2`` and ``L2_t H1``.  ``slow_fast_study`` integrates the
irreversible system with ``k0m = lam`` and no diffusion of ``p, q``, checks
the exchange variable ``s = lam q`` against its variation-of-constants
formula, and compares ``(u, v)`` with the reduced constant-feed model.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid, trapezoid

from .core import Parameters, State, total_mass
from .envara import rk4_step
from .grid import GridSpec, h1_norm_sq, l2_norm_sq
from .stepper import ModelVariant, NumericalAbort, StepConfig, integrate

log = logging.getLogger(__name__)


class SweepError(NumericalAbort):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    fields: np.ndarray  # (S, 4, *grid.shape)


def run_trajectory(initial: State, grid: GridSpec, params: Parameters, variant: ModelVariant, cfg: StepConfig) -> Trajectory:
    res = integrate(initial, grid, params, variant, cfg, keep_states=True, diagnostics=False)
    return Trajectory(np.array(res.times), np.array(res.states))


def trajectory_distance(a: Trajectory, b: Trajectory, grid: GridSpec) -> tuple[float, float]:
    """``(max_t |a - b|_{L2}, (int_0^T |a - b|_{H1}^2 dt)^{1/2})`` over all four species."""
    if a.fields.shape != b.fields.shape or not np.array_equal(a.times, b.times):
        raise ValueError("trajectories must share grid and sample times")
    diff = a.fields - b.fields
    l2 = np.array([sum(l2_norm_sq(d[i], grid) for i in range(4)) for d in diff])
    h1 = np.array([sum(h1_norm_sq(d[i], grid) for i in range(4)) for d in diff])
    sup = float(np.sqrt(l2.max()))
    if len(a.times) > 1:
        l2t = float(np.sqrt(trapezoid(h1, a.times)))
    else:
        l2t = 0.0
    return sup, l2t


@dataclass
class OrderFit:
    order: float
    ci_low: float
    ci_high: float


def fit_order(x, err) -> OrderFit:
    """Least-squares slope of ``log err`` against ``log x`` with a 95% interval."""
    x = np.asarray(x, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = (x > 0) & (err > 0)
    x, err = x[keep], err[keep]
    if x.size < 2:
        return OrderFit(math.nan, math.nan, math.nan)
    fit = stats.linregress(np.log(x), np.log(err))
    if x.size > 2:
        half = stats.t.ppf(0.975, x.size - 2) * fit.stderr
    else:
        half = math.nan
    return OrderFit(float(fit.slope), float(fit.slope - half), float(fit.slope + half))


@dataclass
class SweepResult:
    eps: np.ndarray
    sup_l2: np.ndarray
    l2t_h1: np.ndarray
    fit_sup_l2: OrderFit
    fit_l2t_h1: OrderFit

    def rows(self):
        for e, a, b in zip(self.eps, self.sup_l2, self.l2t_h1):
            yield float(e), float(a), float(b)


def _sweep_job(args):
    eps, initial, grid, params, cfg = args
    variant = ModelVariant.irgs() if eps is None else ModelVariant.regs_eps(eps)
    try:
        return eps, run_trajectory(initial, grid, params, variant, cfg)
    except NumericalAbort as exc:
        label = "IrGS" if eps is None else f"eps={eps:g}"
        raise SweepError(f"run {label} aborted: {exc}") from exc


def epsilon_sweep(
    initial: State,
    grid: GridSpec,
    params: Parameters,
    cfg: StepConfig,
    eps_list,
    workers: int = 1,
) -> SweepResult:
    """Distances between ``ReGSEps(eps)`` and ``IrGS`` trajectories.

    All runs start from the same ``initial`` object, so differences isolate
    ``eps``.  With ``workers > 1`` runs execute in separate processes.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("eps_list must not be empty")
    if any(e < 0 for e in eps_list):
        raise ValueError("eps values must be >= 0")
    jobs = [(None, initial, grid, params, cfg)] + [(e, initial, grid, params, cfg) for e in eps_list]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    reference = results[0][1]
    sup, l2t = [], []
    for eps, traj in results[1:]:
        a, b = trajectory_distance(traj, reference, grid)
        log.info("eps=%g supL2=%.6e L2tH1=%.6e", eps, a, b)
        sup.append(a)
        l2t.append(b)
    eps = np.array(eps_list)
    sup, l2t = np.array(sup), np.array(l2t)
    return SweepResult(eps, sup, l2t, fit_order(eps, sup), fit_order(eps, l2t))


def exchange_closed_form(times, u_series, s0: float, lam: float, k0p: float) -> np.ndarray:
    """``s(t) = s0 e^{-lam t} + lam k0p int_0^t u(tau) e^{-lam (t - tau)} dtau``.

    The integral uses the trapezoidal rule on the sampled ``u`` (time along
    axis 0; trailing axes are nodes).
    """
    t = np.asarray(times, dtype=float)
    u = np.asarray(u_series, dtype=float)
    w = np.exp(lam * t).reshape((-1,) + (1,) * (u.ndim - 1))
    integral = cumulative_trapezoid(u * w, t, axis=0, initial=0.0)
    decay = np.exp(-lam * t).reshape(w.shape)
    return s0 * decay + lam * k0p * decay * integral


def exchange_constant_u(times, U: float, s0: float, lam: float, k0p: float) -> np.ndarray:
    """Closed form of the exchange variable when ``u`` is held at ``U``."""
    e = np.exp(-lam * np.asarray(times, dtype=float))
    return s0 * e + k0p * U * (1.0 - e)


def integrate_forced_exchange(u_of_t, s0: float, lam: float, k0p: float, T: float, dt: float):
    """RK4 solution of ``s' = lam (k0p u(t) - s)`` for a prescribed ``u(t)``."""
    n = max(1, math.ceil(T / dt - 1e-9))
    h = T / n
    times = np.arange(n + 1) * h
    s = np.empty(n + 1)
    s[0] = s0
    y = (float(s0),)
    for i in range(n):
        y = rk4_step(lambda t, y: (lam * (k0p * u_of_t(t) - y[0]),), times[i], y, h)
        s[i + 1] = y[0]
    return times, s


@dataclass
class SlowFastResult:
    lam: float
    feed: float
    q_to_u_ratio: float
    times: np.ndarray
    s_full: np.ndarray  # domain mean of lam * q
    s_closed: np.ndarray  # domain mean of the closed form
    closed_form_residual: float  # max over nodes and samples
    uv_deviation: np.ndarray  # L2 distance of (u, v), full vs reduced, per sample
    max_uv_deviation: float


def slow_fast_initial(grid: GridSpec, lam: float, feed: float, k0p: float, u0=1.0, v0=0.25, p0=0.0,
                      perturbation: float = 0.0, seed: int = 0) -> State:
    """Initial state with uniform ``q0 = k0p feed / lam`` (so ``s0 = k0p feed``)."""
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    rng = np.random.default_rng(seed)
    f = np.empty((4,) + grid.shape)
    f[0] = u0
    f[1] = v0 * (1.0 + perturbation * rng.standard_normal(grid.shape))
    f[2] = p0
    f[3] = k0p * feed / lam
    return State(0.0, np.maximum(f, 0.0))


def slow_fast_study(
    params: Parameters,
    grid: GridSpec,
    lam: float,
    initial: State,
    T: float,
    dt: float,
    sample_every: int = 1,
    positivity_floor: float = 0.0,
) -> SlowFastResult:
    """Exchange closed form and reduced-model comparison at rate ``lam``.

    ``params`` supplies ``k0p, k1p, k2p, du, dv``; ``k0m`` is set to
    ``lam`` and ``dp_ = dq = 0``.  ``initial.q`` must be spatially uniform.
    """
    if not lam > 0:
        raise ValueError("lambda must be > 0")
    q0 = initial.q
    if np.ptp(q0) != 0.0:
        raise ValueError("slow-fast study needs a spatially uniform q0")
    mass = total_mass(initial, grid)
    eff = params.with_(k0m=lam, dp_=0.0, dq=0.0, z0=max(params.z0, mass))
    s0 = lam * float(q0.flat[0])
    feed = s0 / eff.k0p
    cfg = StepConfig(dt=dt, t_end=T, sample_every=sample_every, positivity_floor=positivity_floor)
    full = run_trajectory(initial, grid, eff, ModelVariant.irgs(), cfg)
    reduced = run_trajectory(initial, grid, eff, ModelVariant.reduced(feed), cfg)

    s_full = lam * full.fields[:, 3]
    s_closed = exchange_closed_form(full.times, full.fields[:, 0], s0, lam, eff.k0p)
    resid = float(np.max(np.abs(s_full - s_closed)))
    dev = np.array([
        math.sqrt(l2_norm_sq(a[0] - b[0], grid) + l2_norm_sq(a[1] - b[1], grid))
        for a, b in zip(full.fields, reduced.fields)
    ])
    axes = tuple(range(1, grid.dim + 1))
    return SlowFastResult(
        lam=lam,
        feed=feed,
        q_to_u_ratio=float(q0.flat[0] / max(np.mean(initial.u), 1e-300)),
        times=full.times,
        s_full=s_full.mean(axis=axes),
        s_closed=s_closed.mean(axis=axes),
        closed_form_residual=resid,
        uv_deviation=dev,
        max_uv_deviation=float(dev.max()),
    )
