import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavslice.channel import cross_gains, rate, sinr
from uavslice.energy import (UavLoad, compute_energy, hover_energy, hover_time, movement_energy, movement_power,
                             offload_latency, total_energy, transmission_energy, uav_energy)
from uavslice.scenario import SystemParams
from uavslice.slicer import solve


def rotary_power(V, p):
    """Propulsion power written out independently (profile + induced + parasite)."""
    profile = p.profile_power_w * (1 + 3 * V * V / (p.tip_speed_mps * p.tip_speed_mps))
    ratio = V * V / (2 * p.induced_velocity_mps ** 2)
    induced = p.induced_power_w * math.sqrt(math.sqrt(1 + ratio * ratio) - ratio)
    parasite = 0.5 * p.fuselage_drag_ratio * p.air_density_kgm3 * p.rotor_solidity * p.rotor_disc_area_m2 * V ** 3
    return profile + induced + parasite


def test_hover_power(params):
    assert movement_power(0.0, params) == params.profile_power_w + params.induced_power_w
    assert movement_power(0.0, params) == pytest.approx(168.49)


def test_cruise_power_pinned(params):
    assert movement_power(12.0, params) == pytest.approx(rotary_power(12.0, params), rel=1e-12)
    assert movement_power(12.0, params) == pytest.approx(127.806748, abs=1e-5)


def test_negative_speed(params):
    with pytest.raises(ValueError):
        movement_power(-1.0, params)


def test_movement_energy(params):
    assert movement_energy([0, 0, 0], [0, 0, 0], params) == 0.0
    e = movement_energy([0, 0, 0], [120, 0, 0], params)
    assert e == pytest.approx(10 * movement_power(12.0, params))
    assert movement_energy([0, 0, 0], [240, 0, 0], params) == pytest.approx(2 * e)


def test_compute_energy(params):
    assert compute_energy([], params) == 0.0
    assert compute_energy([4e9], params) == pytest.approx(1.12)
    assert compute_energy([2e9], params) == pytest.approx(1.12 / 4)


def test_offload_latency_zero_speed():
    with pytest.raises(ValueError):
        offload_latency(1e6, 700, 1e6, 0.0)


def _load(**kw):
    base = dict(uav=0, placement=np.zeros(3), docking=np.zeros(3), raw_data_bits=1e6, task_bits=1e6,
                cycles_per_bit=700.0)
    base.update(kw)
    return UavLoad(**base)


def test_hover_cases(params):
    assert hover_energy(_load(), params) == 0.0
    one = _load(content_users=np.array([0]), content_bits=np.array([5e8]), content_rates=np.array([1e6]),
                content_powers=np.array([1.0]))
    assert hover_energy(one, params) == pytest.approx(params.hover_power_w * 500)
    assert transmission_energy(one) == pytest.approx(500.0)
    # content 100 s against MEC latency 80 s (upload 10 s + compute 70 s)
    mixed = _load(content_users=np.array([0]), content_bits=np.array([1e8]), content_rates=np.array([1e6]),
                  content_powers=np.array([0.3]), mec_users=np.array([1]), mec_rates=np.array([1e5]),
                  mec_speeds=np.array([1e7]))
    assert hover_time(mixed) == pytest.approx(100.0)


def test_zero_rate_with_demand():
    load = _load(content_users=np.array([0]), content_bits=np.array([1e6]), content_rates=np.array([0.0]),
                 content_powers=np.array([1.0]))
    with pytest.raises(ValueError):
        transmission_energy(load)


def test_single_uav_at_dock(params):
    load = _load(content_users=np.array([0]), content_bits=np.array([1e8]), content_rates=np.array([2e6]),
                 content_powers=np.array([0.4]))
    e = uav_energy(load, params)
    assert e.movement_j == 0 and e.compute_j == 0
    assert e.total_j == pytest.approx(params.hover_power_w * 50 + 0.4 * 50)


@settings(max_examples=40, deadline=None)
@given(rates=st.lists(st.floats(1e5, 1e8), min_size=1, max_size=5), which=st.integers(0, 4),
       factor=st.floats(1.0, 10.0))
def test_hover_non_increasing_in_rate(rates, which, factor):
    p = SystemParams()
    r = np.array(rates)
    n = len(r)
    kw = dict(content_users=np.arange(n), content_bits=np.full(n, 1e8), content_powers=np.full(n, 0.1))
    before = hover_energy(_load(content_rates=r, **kw), p)
    r2 = r.copy()
    r2[which % n] *= factor
    assert hover_energy(_load(content_rates=r2, **kw), p) <= before


def test_total_energy_term_by_term(small):
    sc, field = small
    sol = solve(sc, field, restarts=3)
    p = sc.params
    total = 0.0
    n_c, n_s = sc.n_content, sc.n_sensing
    for k in sol.deployed:
        users = np.flatnonzero(sol.association[:, k])
        c = users[users < n_c]
        s = [i for i in users if n_c <= i < n_c + n_s and sol.activation[i - n_c]]
        m = users[users >= n_c + n_s]
        pos = sol.placements[k]
        move = rotary_power(p.uav_speed_mps, p) / p.uav_speed_mps * np.linalg.norm(pos - sc.docks[k])
        times, transmit, comp = [], 0.0, 0.0
        if len(c):
            P = np.array([sol.power[k].per_user_w[int(i)] for i in c])
            G = cross_gains(field.gains(k, pos, c))
            R = rate(p.dl_bandwidth_hz, sinr(G, P, p.noise_power_w))
            t = sc.demand_bits()[c] / R
            times += list(t)
            transmit = float(np.sum(P * t))
        up = np.array(list(s) + list(m), dtype=int)
        if len(up):
            G = cross_gains(field.gains(k, pos, up))
            Rb = rate(p.ul_bandwidth_hz, sinr(G, np.full(len(up), p.user_tx_power_w), p.noise_power_w))
            times += list(p.raw_data_bits / Rb[:len(s)])
            f = np.array([sol.compute[k].per_user_hz[int(i)] for i in m])
            times += list(p.task_bits / Rb[len(s):] + p.task_bits * p.cycles_per_bit / f)
            comp = float(np.sum(p.switched_capacitance * p.task_bits * p.cycles_per_bit * f ** 2))
        total += move + p.hover_power_w * max(times) + transmit + comp
    assert sol.objective_j == pytest.approx(total, rel=1e-10)
    assert total_energy(sol, sc, field).total_j == pytest.approx(total, rel=1e-10)


def test_total_energy_relabel_invariant(small):
    sc, field = small
    sol = solve(sc, field, restarts=2)
    br = total_energy(sol, sc, field)
    assert br.total_j == pytest.approx(sum(e.total_j for e in br.per_uav.values()))
    assert all(v >= 0 for e in br.per_uav.values() for v in vars(e).values())
