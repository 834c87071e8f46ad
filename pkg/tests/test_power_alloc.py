import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_channels
from uavslice.channel import cross_gains, rate, sinr
from uavslice.power_alloc import (InfeasibleMultiplier, PowerContext, allocate_power, compute_e2, p1p_objective,
                                  power_closed_form, rho_bounds)
from uavslice.scenario import SystemParams

P = SystemParams()


def context(seed, n, e2=0.0, bits=5e8):
    g = np.random.default_rng(seed)
    H = random_channels(g, n, P)
    return PowerContext.from_channels(np.arange(n), H, np.full(n, bits), e2)


def test_e2():
    assert compute_e2([], [], P) == 0.0
    assert compute_e2([1.0], [], P) == pytest.approx(P.hover_power_w)
    assert compute_e2([], [2.0 + 3.0], P) == pytest.approx(5 * P.hover_power_w)


@pytest.mark.parametrize("exact", [True, False])
def test_closed_form_basics(exact):
    assert power_closed_form(10.0, 1e-13, 1e-8, 5e8, P, associated=False, exact=exact) == 0.0
    big = power_closed_form(1e16, 1e-13, 1e-8, 5e8, P, exact=exact)
    assert 0 <= big < 1e-9


def test_closed_form_reference_values():
    omega, g, D, rho = 1e-13, 1e-8, 5e8, 2e4
    x = P.hover_power_w * D / (rho * P.dl_bandwidth_hz)
    assert power_closed_form(rho, omega, g, D, P) == pytest.approx((2 ** x - 1) * omega / g, rel=1e-12)
    rho = 2 * P.hover_power_w * D / (P.dl_bandwidth_hz * g)
    expect = P.hover_power_w * omega * D / (rho * P.dl_bandwidth_hz * g - P.hover_power_w * D)
    assert power_closed_form(rho, omega, g, D, P, exact=False) == pytest.approx(expect, rel=1e-12)


def test_printed_form_pole():
    pole = P.hover_power_w * 5e8 / (P.dl_bandwidth_hz * 1e-8)
    with pytest.raises(InfeasibleMultiplier):
        power_closed_form(0.5 * pole, 1e-13, 1e-8, 5e8, P, exact=False)
    assert power_closed_form(2 * pole, 1e-13, 1e-8, 5e8, P, exact=False) > 0


def test_exact_form_meets_time_target():
    omega, g, D, rho = 2e-13, 3e-9, 5e8, 5000.0
    p = power_closed_form(rho, omega, g, D, P)
    R = P.dl_bandwidth_hz * math.log2(1 + p * g / omega)
    assert P.hover_power_w * D / R == pytest.approx(rho, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10**6), exact=st.booleans())
def test_closed_form_strictly_decreasing(seed, exact):
    g = np.random.default_rng(seed)
    gain, omega, D = g.uniform(1e-10, 1e-7), g.uniform(1e-13, 1e-11), g.uniform(1e7, 1e9)
    if exact:
        # rho at which the user would need 100x the UAV budget
        lo = P.hover_power_w * D / (P.dl_bandwidth_hz * np.log2(1 + 100 * P.uav_max_tx_power_w * gain / omega))
    else:
        lo = 1.01 * P.hover_power_w * D / (P.dl_bandwidth_hz * gain)
    rhos = np.sort(g.uniform(lo, lo * 50, 10))
    vals = [power_closed_form(r, omega, gain, D, P, exact=exact) for r in rhos]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_empty_context():
    ctx = PowerContext(np.zeros(0, int), np.zeros((0, 0)), np.zeros(0), e2=42.0)
    out = allocate_power(ctx, P)
    assert out.per_user_w == {} and out.rho_star == 42.0


def test_single_user_uses_full_budget():
    out = allocate_power(context(1, 1), P)
    assert out.feasible
    assert out.per_user_w[0] == pytest.approx(P.uav_max_tx_power_w, rel=1e-3)


def test_large_e2_relaxes_power():
    ctx = context(2, 3)
    _, rho_eq = rho_bounds(ctx, P)
    ctx.e2 = 2 * rho_eq
    out = allocate_power(ctx, P)
    assert out.rho_star == pytest.approx(ctx.e2)
    assert np.all(out.powers < P.uav_max_tx_power_w / 3)


def test_symmetric_pair_gets_equal_power():
    H = random_channels(np.random.default_rng(5), 1, P)
    G = np.array([[1.0, 0.1], [0.1, 1.0]]) * np.sum(np.abs(H) ** 2)
    out = allocate_power(PowerContext(np.arange(2), G, np.full(2, 5e8)), P)
    assert out.powers[0] == pytest.approx(out.powers[1], rel=1e-9)


@pytest.mark.parametrize("n", [1, 2, 4])
def test_iteration_bound(n):
    ctx = context(7 + n, n)
    lo, hi = rho_bounds(ctx, P)
    out = allocate_power(ctx, P)
    assert out.iterations <= max(math.ceil(math.log2((hi - lo) / P.bisect_tol)), 0) if hi > lo else out.iterations == 0


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 6), e2=st.sampled_from([0.0, 1e3, 1e4]))
def test_budget_and_equalization(seed, n, e2):
    ctx = context(seed, n, e2)
    out = allocate_power(ctx, P)
    assert np.all(out.powers >= 0)
    assert out.powers.sum() <= P.uav_max_tx_power_w * (1 + 1e-9)
    if out.feasible and out.rho_star > 1.01 * e2:
        times = P.hover_power_w * ctx.demand_bits / rate(P.dl_bandwidth_hz, sinr(ctx.cross, out.powers,
                                                                                   P.noise_power_w))
        assert np.allclose(times, out.rho_star, rtol=0.05)


def grid_oracle(ctx, n_grid=4000):
    grid = np.linspace(P.uav_max_tx_power_w / n_grid, P.uav_max_tx_power_w, n_grid)
    return min(p1p_objective([p], ctx, P) for p in grid)


@pytest.mark.parametrize("seed", range(8))
def test_single_user_matches_grid(seed):
    ctx = context(100 + seed, 1, e2=[0.0, 3e3][seed % 2])
    out = allocate_power(ctx, P)
    assert p1p_objective(out.powers, ctx, P) <= grid_oracle(ctx) * 1.02


def test_printed_variant_falls_back_at_default_scale():
    # the stationarity form needs rho above P_hov*D/(B g), far beyond the equal-split time here
    ctx = context(3, 2)
    out = allocate_power(ctx, P, exact=False)
    assert not out.feasible
    assert out.powers.sum() == pytest.approx(P.uav_max_tx_power_w)


def test_printed_variant_on_small_demand():
    ctx = context(4, 2, bits=1e3)
    out = allocate_power(ctx, P, exact=False)
    assert out.powers.sum() <= P.uav_max_tx_power_w * (1 + 1e-9) and np.all(out.powers >= 0)
