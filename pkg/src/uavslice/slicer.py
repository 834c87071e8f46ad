"""Graph-based greedy slicing heuristic with randomized restarts.

Users and UAVs form a weighted bipartite view of the quadripartite graph
(content, sensing and MEC users on one side, UAVs on the other).  An edge
weight is the reciprocal of the marginal energy of serving the user from the
UAV's current position, so the heaviest edge is the cheapest association.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import ChannelField, mrt
from .energy import movement_power
from .scenario import Scenario, SystemParams
from .sensing import gathered_information
from .solution import InfeasibleError, SliceSolution, assemble_solution, validate_solution


def optimal_altitude(max_horizontal_m: float, params: SystemParams) -> float:
    """Altitude covering the farthest associated user at the optimal elevation angle, clamped."""
    z = max_horizontal_m * math.tan(math.radians(params.elevation_angle_deg))
    return float(min(max(z, params.altitude_min_m), params.altitude_max_m))


def place_over(user_xy, params: SystemParams, center=None) -> np.ndarray:
    """UAV position above ``center`` (default: centroid of the users) at the matching altitude."""
    user_xy = np.asarray(user_xy, dtype=float).reshape(-1, 2)
    if len(user_xy) == 0:
        raise ValueError("cannot place a UAV without associated users")
    c = user_xy.mean(axis=0) if center is None else np.asarray(center, dtype=float)[:2]
    spread = float(np.max(np.hypot(*(user_xy - c).T)))
    return np.array([c[0], c[1], optimal_altitude(spread, params)])


def edge_weight(role: str, distance_m: float, rate_bps: float, params: SystemParams, delta: int = 1,
                stored: int = 1, demand_bits: float = 0.0, power_w: float = 0.0, speed_hz: float = 1.0) -> float:
    """Reciprocal marginal energy of one user-UAV edge.

    ``stored`` is the number of the user's demanded contents held by the UAV and
    ``demand_bits`` their total size; ``delta`` gates sensing edges.
    """
    move = movement_power(params.uav_speed_mps, params) / params.uav_speed_mps * distance_m
    P_hov = params.hover_power_w
    if role == "content":
        if stored == 0:
            return 0.0
        denom = move + (P_hov + power_w) * demand_bits / rate_bps
        numer = stored
    elif role == "sensing":
        if delta == 0:
            return 0.0
        denom = move + P_hov * params.raw_data_bits / rate_bps
        numer = delta
    elif role == "mec":
        denom = move + P_hov * (params.task_bits / rate_bps + params.task_bits * params.cycles_per_bit / speed_hz)
        numer = 1
    else:
        raise ValueError(f"unknown role {role!r}")
    if denom <= 0:
        raise ValueError("edge has zero marginal energy")
    return numer / denom


class AssociationGraph:
    """Weights and evolving state of one greedy pass.

    ``weights[i, k]`` is the current edge weight; a zero row means user ``i`` is
    associated (or can no longer be). Partitions are index ranges of the scenario.
    """

    def __init__(self, scenario: Scenario, field: ChannelField, start_xy):
        p = scenario.params
        self.scenario, self.field, self.params = scenario, field, p
        N, U = scenario.n_users, scenario.n_uavs
        self.n_c, self.n_s = scenario.n_content, scenario.n_sensing
        self.content, self.sensing, self.mec = scenario.content_idx, scenario.sensing_idx, scenario.mec_idx
        start = np.asarray(start_xy, dtype=float).reshape(U, 2)
        self.placements = np.column_stack([start, np.full(U, p.altitude_min_m)])
        self.association = np.zeros((N, U), dtype=bool)
        self.activation = np.zeros(self.n_s, dtype=bool)
        self.info = 0.0
        self.delta = int(scenario.required_info > 0)

        self._move = movement_power(p.uav_speed_mps, p) / p.uav_speed_mps
        sizes = scenario.content_sizes
        self._stored = scenario.demand.astype(int) @ scenario.storage.astype(int)
        self._stored_bits = (scenario.demand * sizes) @ scenario.storage.astype(float)
        servable = self._stored.astype(bool).sum(axis=0)
        self._p_eq = np.where(servable > 0, p.uav_max_tx_power_w / np.maximum(servable, 1), 0.0)
        self._f_eq = p.uav_compute_hz / max(scenario.n_mec, 1)

        self.weights = np.zeros((N, U))
        rows = np.arange(N)
        for k in range(U):
            self.weights[:, k] = self._column(k, rows)

    def _interference(self, H, k: int, pos, users, power: float) -> np.ndarray:
        if len(users) == 0:
            return np.zeros(len(H))
        W = mrt(self.field.gains(k, pos, users))
        return power * (np.abs(H.conj() @ W.T) ** 2).sum(axis=1)

    def _column(self, k: int, rows: np.ndarray) -> np.ndarray:
        """Fresh weights of ``rows`` toward UAV ``k`` at its current placement."""
        p = self.params
        out = np.zeros(len(rows))
        if len(rows) == 0:
            return out
        pos = self.placements[k]
        xy = self.scenario.positions[rows]
        move = self._move * np.hypot(xy[:, 0] - pos[0], xy[:, 1] - pos[1])
        assoc = np.flatnonzero(self.association[:, k])
        is_c = rows < self.n_c
        is_s = (rows >= self.n_c) & (rows < self.n_c + self.n_s)
        is_m = rows >= self.n_c + self.n_s
        if not self.delta:
            is_s = np.zeros_like(is_s)
        # content: only users whose demand the UAV stores
        c_rows = np.flatnonzero(is_c)
        c_rows = c_rows[self._stored[rows[c_rows], k] > 0]
        if len(c_rows):
            H = self.field.gains(k, pos, rows[c_rows])
            P = self._p_eq[k]
            interf = self._interference(H, k, pos, assoc[assoc < self.n_c], P)
            gamma = P * np.sum(np.abs(H) ** 2, axis=1) / (interf + p.noise_power_w)
            R = p.dl_bandwidth_hz * np.log2(1.0 + gamma)
            users = rows[c_rows]
            denom = move[c_rows] + (p.hover_power_w + P) * self._stored_bits[users, k] / R
            out[c_rows] = self._stored[users, k] / denom
        u_rows = np.flatnonzero(is_s | is_m)
        if len(u_rows):
            H = self.field.gains(k, pos, rows[u_rows])
            interf = self._interference(H, k, pos, assoc[assoc >= self.n_c], p.user_tx_power_w)
            gamma = p.user_tx_power_w * np.sum(np.abs(H) ** 2, axis=1) / (interf + p.noise_power_w)
            R = p.ul_bandwidth_hz * np.log2(1.0 + gamma)
            sens = is_s[u_rows]
            t = np.where(sens, p.raw_data_bits / R,
                         p.task_bits / R + p.task_bits * p.cycles_per_bit / self._f_eq)
            out[u_rows] = 1.0 / (move[u_rows] + p.hover_power_w * t)
        return out

    def step(self, rng: np.random.Generator | None = None) -> tuple[int, int] | None:
        """Associate the heaviest edge; None once every weight is zero."""
        W = self.weights
        top = W.max() if W.size else 0.0
        if top <= 0:
            return None
        if rng is None:
            flat = int(np.argmax(W))
        else:
            ties = np.flatnonzero(W.ravel() == top)
            flat = int(ties[rng.integers(len(ties))]) if len(ties) > 1 else int(ties[0])
        i, k = divmod(flat, W.shape[1])
        self.associate(i, k)
        return i, k

    def associate(self, i: int, k: int):
        sc, p = self.scenario, self.params
        W = self.weights
        self.association[i, k] = True
        users = np.flatnonzero(self.association[:, k])
        self.placements[k] = place_over(sc.positions[users], p)
        if self.n_c <= i < self.n_c + self.n_s:
            self.activation[i - self.n_c] = True
            self.info = gathered_information(self.activation, sc.sensing_positions(), p.raw_data_bits,
                                             p.correlation_extent_m)
            if self.info >= sc.required_info:
                self.delta = 0
                W[self.n_c:self.n_c + self.n_s] = 0.0
        W[i] = 0.0
        rows = np.flatnonzero(W[:, k] > 0)
        W[rows, k] = self._column(k, rows)

    @property
    def deployed(self) -> tuple:
        return tuple(int(k) for k in np.flatnonzero(self.association.any(axis=0)))


def _check_servable(scenario: Scenario):
    if scenario.n_content:
        bad = np.flatnonzero(~scenario.can_serve().any(axis=1))
        if len(bad):
            raise InfeasibleError(f"content users {bad.tolist()} demand content no single UAV stores")


def restart_rng(scenario: Scenario, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(scenario.seed) & 0xFFFFFFFF, 0x51C3, int(restart)]))


# Restart start points are offset from the docking point by up to this share of the area side.
RESTART_SPREAD = 1.0 / 6.0


def greedy_pass(scenario: Scenario, field: ChannelField, restart: int = 0, spread_m: float | None = None) -> SliceSolution:
    """One greedy association pass (no power/CPU refinement).

    Restart 0 starts every UAV over its docking point with lowest-index tie
    breaking. Later restarts jitter each start point by up to ``spread_m`` in x
    and y (kept inside the area) and break ties at random, both drawn from the
    restart's own stream.
    """
    _check_servable(scenario)
    U, side = scenario.n_uavs, scenario.params.area_side_m
    if restart == 0:
        rng, start = None, scenario.docks[:, :2]
    else:
        rng = restart_rng(scenario, restart)
        spread = side * RESTART_SPREAD if spread_m is None else spread_m
        jitter = rng.uniform(-spread, spread, size=(U, 2))
        start = np.clip(scenario.docks[:, :2] + jitter, 0.0, side)
    graph = AssociationGraph(scenario, field, start)
    for _ in range(scenario.n_users):
        if graph.step(rng) is None:
            break
    deployed = graph.deployed
    return SliceSolution(deployed, {k: graph.placements[k].copy() for k in deployed}, graph.association,
                         graph.activation, {}, {}, solver="heuristic", meta={"restart": restart})


def solve(scenario: Scenario, field: ChannelField | None = None, restarts: int | None = None) -> SliceSolution:
    """Best of Q greedy passes after per-UAV power and CPU allocation."""
    field = ChannelField.for_scenario(scenario) if field is None else field
    Q = scenario.params.restarts if restarts is None else restarts
    best, first_report, objectives = None, None, []
    for q in range(max(Q, 1)):
        g = greedy_pass(scenario, field, q)
        sol = assemble_solution(scenario, field, g.association, g.activation, g.placements, g.deployed,
                                solver="heuristic")
        report = validate_solution(sol, scenario)
        objectives.append(sol.objective_j if report.ok else float("nan"))
        if not report.ok:
            first_report = first_report or report
            continue
        if best is None or sol.objective_j < best.objective_j:
            best = sol
            best.meta = {"restart": q}
    if best is None:
        raise InfeasibleError(f"all restarts infeasible: {first_report}", first_report)
    best.meta["restart_objectives"] = objectives
    return best
