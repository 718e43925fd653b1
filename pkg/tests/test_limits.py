import math

import numpy as np
import pytest

from revgs.core import Parameters, State, detailed_balance_equilibrium
from revgs.envara import rk4_step
from revgs.grid import GridSpec
from revgs.initial import perturbed_equilibrium
from revgs.limits import (
    SweepError, Trajectory, epsilon_sweep, exchange_closed_form, exchange_constant_u, fit_order,
    integrate_forced_exchange, slow_fast_initial, slow_fast_study, trajectory_distance,
)
from revgs.stepper import StepConfig

G = GridSpec.uniform(2, 8)


def traj(rng, n=5):
    return Trajectory(np.linspace(0, 1, n), rng.standard_normal((n, 4) + G.shape))


def test_distance_identical_and_offset(rng):
    a = traj(rng)
    assert trajectory_distance(a, a, G) == (0.0, 0.0)
    b = Trajectory(a.times, a.fields.copy())
    b.fields[:, 0] += 0.3
    sup, l2t = trajectory_distance(a, b, G)
    assert sup == pytest.approx(0.3, rel=1e-12)
    assert l2t == pytest.approx(0.3, rel=1e-12)


def test_distance_triangle(rng):
    for _ in range(20):
        a, b, c = traj(rng), traj(rng), traj(rng)
        b.times = c.times = a.times
        for k in range(2):
            assert trajectory_distance(a, c, G)[k] <= trajectory_distance(a, b, G)[k] + trajectory_distance(b, c, G)[k] + 1e-12


def test_distance_mismatch(rng):
    a = traj(rng)
    with pytest.raises(ValueError):
        trajectory_distance(a, traj(rng, 6), G)
    b = Trajectory(a.times + 0.1, a.fields)
    with pytest.raises(ValueError):
        trajectory_distance(a, b, G)


def test_fit_order():
    x = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    f = fit_order(x, 3 * x**1.5)
    assert f.order == pytest.approx(1.5, rel=1e-12)
    assert f.ci_low <= 1.5 <= f.ci_high
    assert math.isnan(fit_order([1.0], [1.0]).order)


def small_setup():
    g = GridSpec.uniform(2, 8)
    p = Parameters()
    s = perturbed_equilibrium(g, detailed_balance_equilibrium(p), 1e-2, seed=2)
    return g, p, s


def test_sweep_eps_zero_exact():
    g, p, s = small_setup()
    res = epsilon_sweep(s, g, p, StepConfig(dt=0.01, t_end=0.2), [0.0])
    assert res.sup_l2[0] == 0.0 and res.l2t_h1[0] == 0.0


def test_sweep_order_and_monotone():
    g, p, s = small_setup()
    res = epsilon_sweep(s, g, p, StepConfig(dt=0.01, t_end=0.3), [1e-1, 1e-2, 1e-3])
    assert np.all(np.diff(res.sup_l2) < 0) and np.all(np.diff(res.l2t_h1) < 0)
    assert abs(res.fit_sup_l2.order - 1) < 0.2


def test_sweep_parallel_matches_serial():
    g, p, s = small_setup()
    cfg = StepConfig(dt=0.01, t_end=0.1)
    a = epsilon_sweep(s, g, p, cfg, [1e-1, 1e-2])
    b = epsilon_sweep(s, g, p, cfg, [1e-1, 1e-2], workers=2)
    assert np.array_equal(a.sup_l2, b.sup_l2) and np.array_equal(a.l2t_h1, b.l2t_h1)


def test_sweep_abort_names_eps():
    g = GridSpec.uniform(1, 8)
    # mass is conserved, so only an unstable step size can blow up
    p = Parameters(k1p=1e4)
    f = np.full((4, 8), 1.0)
    with pytest.raises(SweepError, match="run IrGS aborted"):
        epsilon_sweep(State(0.0, f), g, p, StepConfig(dt=0.1, t_end=5.0), [0.5])


def test_sweep_validation():
    g, p, s = small_setup()
    with pytest.raises(ValueError):
        epsilon_sweep(s, g, p, StepConfig(dt=0.1, t_end=0.1), [])
    with pytest.raises(ValueError):
        epsilon_sweep(s, g, p, StepConfig(dt=0.1, t_end=0.1), [-1.0])


def test_exchange_closed_forms_agree():
    t = np.linspace(0, 5, 2001)
    u = np.full(t.shape, 0.7)
    a = exchange_closed_form(t, u, 0.3, 0.5, 1.2)
    b = exchange_constant_u(t, 0.7, 0.3, 0.5, 1.2)
    assert a[0] == 0.3
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_forced_exchange_fourth_order():
    lam, k0p, U, s0, T = 0.8, 1.3, 0.6, 0.1, 4.0
    errs = []
    dts = [0.4, 0.2, 0.1, 0.05]
    for dt in dts:
        t, s = integrate_forced_exchange(lambda _t: U, s0, lam, k0p, T, dt)
        errs.append(np.abs(s - exchange_constant_u(t, U, s0, lam, k0p)).max())
    assert fit_order(dts, errs).order > 3.7


def test_slow_fast_study_basic():
    g = GridSpec.uniform(2, 8)
    p = Parameters(k1m=0.0, k2m=0.0)
    res = []
    for lam in (0.2, 0.1):
        init = slow_fast_initial(g, lam, 0.05, p.k0p, perturbation=0.05, seed=1)
        r = slow_fast_study(p, g, lam, init, T=2.0, dt=0.01)
        assert r.s_full[0] == r.s_closed[0] == pytest.approx(lam * init.q.flat[0], rel=1e-15)
        assert r.closed_form_residual < 1e-4
        assert np.all(r.uv_deviation >= 0)
        res.append(r)
    assert res[1].max_uv_deviation < res[0].max_uv_deviation


def test_slow_fast_residual_converges_second_order():
    g = GridSpec.uniform(2, 8)
    p = Parameters(k1m=0.0, k2m=0.0)
    lam = 0.5
    init = slow_fast_initial(g, lam, 0.05, p.k0p, perturbation=0.05, seed=1)
    dts = [0.04, 0.02, 0.01]
    errs = [slow_fast_study(p, g, lam, init, T=2.0, dt=dt).closed_form_residual for dt in dts]
    assert fit_order(dts, errs).order >= 1.7


def test_slow_fast_errors():
    g = GridSpec.uniform(1, 8)
    with pytest.raises(ValueError):
        slow_fast_study(Parameters(), g, 0.0, State(0.0, np.ones((4, 8))), 1.0, 0.1)
    f = np.ones((4, 8))
    f[3, 0] = 2.0
    with pytest.raises(ValueError, match="uniform"):
        slow_fast_study(Parameters(), g, 0.5, State(0.0, f), 1.0, 0.1)
