"""UAV energy accounting: propulsion, hovering, computing and transmission."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import cross_gains, rate, sinr
from .scenario import Scenario, SystemParams


def movement_power(V: float, params: SystemParams) -> float:
    """Rotary-wing propulsion power (W) at forward speed ``V``."""
    if V < 0:
        raise ValueError(f"speed must be non-negative, got {V}")
    p = params
    blade = p.profile_power_w * (1.0 + 3.0 * V ** 2 / p.tip_speed_mps ** 2)
    v0 = p.induced_velocity_mps
    induced = p.induced_power_w * math.sqrt(math.sqrt(1.0 + V ** 4 / (4.0 * v0 ** 4)) - V ** 2 / (2.0 * v0 ** 2))
    parasite = 0.5 * p.fuselage_drag_ratio * p.air_density_kgm3 * p.rotor_solidity * p.rotor_disc_area_m2 * V ** 3
    return blade + induced + parasite


def movement_energy(docking, placement, params: SystemParams) -> float:
    V = params.uav_speed_mps
    if V <= 0:
        raise ValueError("UAV speed must be positive")
    dist = float(np.linalg.norm(np.asarray(docking, dtype=float) - np.asarray(placement, dtype=float)))
    return movement_power(V, params) / V * dist


def offload_latency(task_bits, cycles_per_bit, uplink_rate, speed) -> np.ndarray:
    """Upload plus execution time of offloaded tasks."""
    speed = np.asarray(speed, dtype=float)
    if np.any(speed <= 0):
        raise ValueError("offload latency undefined for a MEC user with zero computing speed")
    return np.asarray(task_bits) / np.asarray(uplink_rate) + np.asarray(task_bits) * np.asarray(cycles_per_bit) / speed


@dataclass
class UavLoad:
    """Everything one UAV serves, with the rates seen at its placement."""
    uav: int
    placement: np.ndarray
    docking: np.ndarray
    content_users: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    content_bits: np.ndarray = field(default_factory=lambda: np.zeros(0))
    content_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    content_powers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sensing_users: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    sensing_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mec_users: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    mec_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mec_speeds: np.ndarray = field(default_factory=lambda: np.zeros(0))
    task_bits: np.ndarray | float = 0.0
    cycles_per_bit: np.ndarray | float = 0.0
    raw_data_bits: float = 0.0

    def download_times(self) -> np.ndarray:
        if np.any(self.content_rates <= 0) and len(self.content_bits):
            raise ValueError(f"UAV {self.uav}: zero downlink rate for a content user with demand")
        return self.content_bits / self.content_rates

    def upload_times(self) -> np.ndarray:
        return self.raw_data_bits / self.sensing_rates

    def offload_latencies(self) -> np.ndarray:
        if len(self.mec_users) == 0:
            return np.zeros(0)
        return offload_latency(self.task_bits, self.cycles_per_bit, self.mec_rates, self.mec_speeds)


def hover_time(load: UavLoad) -> float:
    """Service duration: the slowest associated user (0 with no users)."""
    times = np.concatenate([load.download_times(), load.upload_times(), load.offload_latencies()])
    return float(times.max()) if len(times) else 0.0


def hover_energy(load: UavLoad, params: SystemParams) -> float:
    return params.hover_power_w * hover_time(load)


def compute_energy(speeds, params: SystemParams, task_bits=None, cycles_per_bit=None) -> float:
    speeds = np.asarray(speeds, dtype=float)
    if np.any(speeds < 0):
        raise ValueError("computing speeds must be non-negative")
    ell = params.task_bits if task_bits is None else np.asarray(task_bits)
    cyc = params.cycles_per_bit if cycles_per_bit is None else np.asarray(cycles_per_bit)
    return float(np.sum(params.switched_capacitance * ell * cyc * speeds ** 2))


def transmission_energy(load: UavLoad) -> float:
    if len(load.content_users) == 0:
        return 0.0
    return float(np.sum(load.content_powers * load.download_times()))


@dataclass(frozen=True)
class UavEnergy:
    movement_j: float
    hover_j: float
    compute_j: float
    transmit_j: float

    @property
    def total_j(self) -> float:
        return self.movement_j + self.hover_j + self.compute_j + self.transmit_j


@dataclass(frozen=True)
class EnergyBreakdown:
    per_uav: dict
    total_j: float

    def to_dict(self) -> dict:
        return {"total_j": self.total_j,
                "per_uav": {str(k): vars(e) | {"total_j": e.total_j} for k, e in self.per_uav.items()}}


def uav_energy(load: UavLoad, params: SystemParams) -> UavEnergy:
    return UavEnergy(
        movement_j=movement_energy(load.docking, load.placement, params),
        hover_j=hover_energy(load, params),
        compute_j=compute_energy(load.mec_speeds, params, load.task_bits, load.cycles_per_bit),
        transmit_j=transmission_energy(load),
    )


def uplink_rates(G_uplink: np.ndarray, params: SystemParams) -> np.ndarray:
    n = len(G_uplink)
    return rate(params.ul_bandwidth_hz, sinr(G_uplink, np.full(n, params.user_tx_power_w), params.noise_power_w))


def load_from_cross(scenario: Scenario, uav: int, placement, content, G_content, sensing, mec, G_uplink,
                    content_powers, mec_speeds, uplink=None) -> UavLoad:
    """UavLoad from precomputed cross-gain matrices (uplink rows: sensing first, then MEC)."""
    p = scenario.params
    load = UavLoad(uav, np.asarray(placement, dtype=float), scenario.docks[uav], raw_data_bits=p.raw_data_bits,
                   task_bits=p.task_bits, cycles_per_bit=p.cycles_per_bit)
    content = np.asarray(content, dtype=int)
    if len(content):
        load.content_users = content
        load.content_bits = scenario.demand_bits()[content]
        load.content_powers = np.asarray(content_powers, dtype=float)
        load.content_rates = rate(p.dl_bandwidth_hz, sinr(G_content, load.content_powers, p.noise_power_w))
    n_s = len(sensing)
    if n_s + len(mec):
        r = uplink_rates(G_uplink, p) if uplink is None else uplink
        load.sensing_users, load.sensing_rates = np.asarray(sensing, dtype=int), r[:n_s]
        load.mec_users, load.mec_rates = np.asarray(mec, dtype=int), r[n_s:]
        load.mec_speeds = np.asarray(mec_speeds, dtype=float)
    return load


def build_load(scenario: Scenario, field, uav: int, placement, content, sensing, mec,
               content_powers, mec_speeds) -> UavLoad:
    """Evaluate rates at ``placement`` for the given user groups (sensing = active only)."""
    placement = np.asarray(placement, dtype=float)
    content = np.asarray(content, dtype=int)
    uplink = np.concatenate([np.asarray(sensing, dtype=int), np.asarray(mec, dtype=int)])
    G_c = cross_gains(field.gains(uav, placement, content)) if len(content) else None
    G_u = cross_gains(field.gains(uav, placement, uplink)) if len(uplink) else None
    return load_from_cross(scenario, uav, placement, content, G_c, sensing, mec, G_u, content_powers, mec_speeds)


def solution_loads(solution, scenario: Scenario, field) -> dict:
    """Per deployed UAV load implied by a solution's association, activation, P and f."""
    mu = solution.association
    n_c, n_s = scenario.n_content, scenario.n_sensing
    eta = np.asarray(solution.activation, dtype=bool)
    loads = {}
    for k in solution.deployed:
        users = np.flatnonzero(mu[:, k])
        content = users[users < n_c]
        sensing = users[(users >= n_c) & (users < n_c + n_s)]
        sensing = sensing[eta[sensing - n_c]]
        mec = users[users >= n_c + n_s]
        pw = solution.power[k].per_user_w if k in solution.power else {}
        cf = solution.compute[k].per_user_hz if k in solution.compute else {}
        powers = [pw.get(int(i), 0.0) for i in content]
        speeds = [cf.get(int(i), 0.0) for i in mec]
        loads[k] = build_load(scenario, field, k, solution.placements[k], content, sensing, mec, powers, speeds)
    return loads


def total_energy(solution, scenario: Scenario, field) -> EnergyBreakdown:
    """Objective value: summed energy of the deployed UAVs."""
    per = {k: uav_energy(load, scenario.params) for k, load in solution_loads(solution, scenario, field).items()}
    return EnergyBreakdown(per, float(sum(e.total_j for e in per.values())))
