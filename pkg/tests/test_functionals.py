import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from revgs.core import Parameters, State, detailed_balance_equilibrium
from revgs.diagnostics import DiagnosticsRecord, diagnose
from revgs.functionals import (
    global_constant, global_functionals, inequality_monitor, local_constant, local_functionals, perturbation,
    perturbation_tendency, predicted_lifespan, smallness_threshold,
)
from revgs.grid import GridSpec
from revgs.stepper import ModelVariant, StepConfig, integrate, rhs

from conftest import random_positive_params


def test_perturbation_round_trip(ones, grid2, rng):
    eq = detailed_balance_equilibrium(ones)
    f = rng.uniform(0, 1, (4,) + grid2.shape)
    t = perturbation(State(0.0, f), eq)
    assert np.all(perturbation(State(0.0, eq.fields(grid2.shape)), eq) == 0)
    back = t + eq.as_array().reshape(4, 1, 1)
    np.testing.assert_array_equal(back, f)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_perturbation_tendency_matches_rhs(seed):
    rng = np.random.default_rng(seed)
    p = random_positive_params(rng)
    g = GridSpec.uniform(2, 6)
    eq = detailed_balance_equilibrium(p)
    s = State(0.0, rng.uniform(0, 2, (4,) + g.shape))
    a = perturbation_tendency(perturbation(s, eq), p, eq, g)
    b = rhs(s, g, p, ModelVariant.regs())
    scale = 1 + np.abs(b).max()
    np.testing.assert_allclose(a, b, atol=1e-12 * scale * max(1, max(p.rates)) ** 2)


def test_local_functionals_examples(ones, grid2):
    z = local_functionals(State(0.0, np.zeros((4,) + grid2.shape)), ones, grid2)
    assert (z.E_L, z.D_L) == (0.0, 0.0)
    o = local_functionals(State(0.0, np.ones((4,) + grid2.shape)), ones, grid2)
    assert o.E_L == pytest.approx(4.0, rel=1e-15)
    assert o.D_L == pytest.approx(6.0, rel=1e-15)


def test_local_energy_scaling(ones, grid2, rng):
    f = rng.uniform(0, 1, (4,) + grid2.shape)
    a = local_functionals(State(0.0, f), ones, grid2).E_L
    b = local_functionals(State(0.0, 3 * f), ones, grid2).E_L
    assert b == pytest.approx(9 * a, rel=1e-14)


def test_local_constant_all_ones(ones):
    assert local_constant(ones) == 24.0


def test_global_constant_and_threshold(ones):
    eq = detailed_balance_equilibrium(ones)
    assert global_constant(ones, eq) == 11.0
    assert smallness_threshold(ones, eq) == pytest.approx(1 / 7744, rel=1e-15)


def test_threshold_saturates_and_monotone():
    p = Parameters(k0p=1e-3, k1p=1.0, k2p=1e-2)
    eq = detailed_balance_equilibrium(p)
    assert global_constant(p, eq) < 1 / 8
    assert smallness_threshold(p, eq) == 1.0
    vals = []
    for k in (0.5, 1.0, 2.0, 4.0):
        q = Parameters(k0p=k)
        e = detailed_balance_equilibrium(q)
        vals.append((global_constant(q, e), smallness_threshold(q, e)))
    vals.sort()
    assert all(b[1] <= a[1] for a, b in zip(vals, vals[1:]))


def test_global_functionals_zero_and_cancellation(grid2):
    p = Parameters(k0p=2.0, k0m=0.5)
    eq = detailed_balance_equilibrium(p)
    g0 = global_functionals(np.zeros((4,) + grid2.shape), p, eq, grid2)
    assert (g0.E_g, g0.D_g) == (0.0, 0.0) and g0.C_g == global_constant(p, eq)
    t = np.zeros((4,) + grid2.shape)
    t[3] = 0.01
    t[0] = t[3] * p.k0m / p.k0p
    cross = global_functionals(t, p, eq, grid2)
    # only the (k0p u - k0m q) cross term could involve u and q together; it vanishes
    k0p, k0m, k1p, k1m, k2p, k2m = p.rates
    from revgs.grid import h1_norm_sq
    expected = k0p * k2p * eq.vbar**2 * h1_norm_sq(k1p * t[0], grid2)
    assert cross.D_g == pytest.approx(expected, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
def test_global_quadratic_scaling(seed, c):
    rng = np.random.default_rng(seed)
    p = random_positive_params(rng)
    g = GridSpec.uniform(2, 6)
    eq = detailed_balance_equilibrium(p)
    t = rng.standard_normal((4,) + g.shape)
    a = global_functionals(t, p, eq, g)
    b = global_functionals(c * t, p, eq, g)
    assert b.E_g == pytest.approx(c * c * a.E_g, rel=1e-13)
    assert b.D_g == pytest.approx(c * c * a.D_g, rel=1e-13)
    assert a.E_g >= 0 and a.D_g >= 0


def test_predicted_lifespan():
    assert abs(predicted_lifespan(1.0, 1.0) - math.log(math.sqrt(2))) <= 1e-15
    assert predicted_lifespan(1.0, 2.0) == predicted_lifespan(1.0, 1.0) / 2
    es = [0.1, 0.5, 1, 2, 10, 1e3]
    cs = [0.1, 1, 5, 50]
    for C in cs:
        vals = [predicted_lifespan(E, C) for E in es]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    for E in es:
        vals = [predicted_lifespan(E, C) for C in cs]
        assert all(a > b for a, b in zip(vals, vals[1:]))
    assert 0 < predicted_lifespan(1e8, 1.0) < 1e-15
    with pytest.raises(ValueError):
        predicted_lifespan(0.0, 1.0)


def test_monitor_equilibrium_global(ones, grid2):
    eq = detailed_balance_equilibrium(ones)
    s = State(0.0, eq.fields(grid2.shape))
    res = integrate(s, grid2, ones, ModelVariant.regs(), StepConfig(dt=0.01, t_end=0.05), eq=eq)
    rep = inequality_monitor(res.records, "Global", ones, eq)
    assert np.all(rep.lhs == 0) and np.all(rep.rhs == 0)
    assert rep.satisfied_fraction == 1.0


def test_monitor_local_finite(ones, grid2, rng):
    eq = detailed_balance_equilibrium(ones)
    s = State(0.0, eq.fields(grid2.shape) * (1 + 0.1 * rng.uniform(-1, 1, (4,) + grid2.shape)))
    res = integrate(s, grid2, ones, ModelVariant.regs(), StepConfig(dt=0.01, t_end=0.1))
    rep = inequality_monitor(res.records, "Local", ones)
    assert len(rep.lhs) == len(rep.rhs) == len(rep.times) == len(res.records) - 2
    assert np.all(np.isfinite(rep.lhs)) and 0 <= rep.satisfied_fraction <= 1


def test_monitor_errors(ones):
    recs = [DiagnosticsRecord(t=0.0), DiagnosticsRecord(t=1.0)]
    with pytest.raises(ValueError):
        inequality_monitor(recs, "Local", ones)
    with pytest.raises(ValueError):
        inequality_monitor(recs * 2, "Sideways", ones)
    with pytest.raises(ValueError):
        inequality_monitor([DiagnosticsRecord(t=float(i)) for i in range(3)], "Global", ones,
                           detailed_balance_equilibrium(ones))


def test_diagnose_irreversible_skips_entropy(grid2):
    p = Parameters(k1m=0.0, k2m=0.0)
    rec = diagnose(State(0.0, np.full((4,) + grid2.shape, 0.25)), grid2, p)
    assert rec.D_r is None and rec.F is None and rec.D_d == 0.0 and rec.mass == pytest.approx(1.0)
