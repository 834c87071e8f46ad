"""Downlink power split of one UAV among its content users (bisection on the max-time variable rho)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import cross_gains, rate, sinr
from .scenario import SystemParams


class InfeasibleMultiplier(ValueError):
    """The requested rho/lambda lies outside the closed form's domain."""


@dataclass
class PowerContext:
    """Content-user view of one UAV at a fixed placement.

    ``cross[i, j]`` is |h_i^H w_j|^2 under MRT (its diagonal is ||h_i||^2),
    ``demand_bits`` the bits each user downloads and ``e2`` the
    hover-power-weighted time of the UAV's uplink users.
    """
    users: np.ndarray
    cross: np.ndarray
    demand_bits: np.ndarray
    e2: float = 0.0

    @classmethod
    def from_channels(cls, users, H, demand_bits, e2: float = 0.0) -> "PowerContext":
        users = np.asarray(users, dtype=int)
        cross = cross_gains(H) if len(users) else np.zeros((0, 0))
        return cls(users, cross, np.asarray(demand_bits, dtype=float), float(e2))

    @property
    def n(self) -> int:
        return len(self.users)


@dataclass
class PowerAllocation:
    per_user_w: dict
    rho_star: float
    feasible: bool = True
    iterations: int = 0
    powers: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def total_w(self) -> float:
        return float(sum(self.per_user_w.values()))

    def to_dict(self) -> dict:
        return {"per_user_w": {str(k): v for k, v in self.per_user_w.items()},
                "rho_star": self.rho_star, "feasible": self.feasible}


def compute_e2(upload_times, offload_latencies, params: SystemParams) -> float:
    """Hover-power-weighted duration of the UAV's sensing uploads and MEC offloads."""
    times = np.concatenate([np.ravel(upload_times), np.ravel(offload_latencies)])
    return params.hover_power_w * float(times.max()) if len(times) else 0.0


def _required_sinr(rho, demand_bits, params: SystemParams) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.expm1(params.hover_power_w * demand_bits / (rho * params.dl_bandwidth_hz) * math.log(2.0))


def power_closed_form(rho: float, omega: float, gain: float, demand_bits: float, params: SystemParams,
                      associated: bool = True, exact: bool = True) -> float:
    """Power that makes the user's hover-weighted download time equal ``rho``.

    ``exact`` inverts the rate expression, P = (2^(P_hov D / (rho B)) - 1) * omega / g.
    Otherwise the stationarity relation P = P_hov omega D / (rho B g - P_hov D) is
    used, whose domain ends at its pole rho = P_hov D / (B g).
    """
    if not associated:
        return 0.0
    P_hov = params.hover_power_w
    if exact:
        if rho <= 0:
            raise InfeasibleMultiplier(f"rho must be positive, got {rho}")
        return float(_required_sinr(rho, demand_bits, params) * omega / gain)
    denom = rho * params.dl_bandwidth_hz * gain - P_hov * demand_bits
    if denom <= 0:
        raise InfeasibleMultiplier(f"rho={rho} at or below the pole {P_hov * demand_bits / (params.dl_bandwidth_hz * gain)}")
    return P_hov * omega * demand_bits / denom


def _coupled_powers(rho: float, ctx: PowerContext, params: SystemParams) -> np.ndarray | None:
    """Powers meeting every user's time target jointly (interference included), or None."""
    gamma = _required_sinr(rho, ctx.demand_bits, params)
    if not np.all(np.isfinite(gamma)):
        return None
    A = -ctx.cross.copy()
    A[np.diag_indices(ctx.n)] = np.diag(ctx.cross) / gamma
    try:
        P = np.linalg.solve(A, np.full(ctx.n, params.noise_power_w))
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(P)) or np.any(P <= 0):
        return None
    return P


def _printed_powers(rho: float, ctx: PowerContext, params: SystemParams, previous: np.ndarray) -> np.ndarray | None:
    """One sweep of the stationarity relation with omega taken from ``previous``."""
    G = ctx.cross
    omega = G @ previous - np.diag(G) * previous + params.noise_power_w
    denom = rho * params.dl_bandwidth_hz * np.diag(G) - params.hover_power_w * ctx.demand_bits
    if np.any(denom <= 0):
        return None
    return params.hover_power_w * omega * ctx.demand_bits / denom


def equal_split_rho(ctx: PowerContext, params: SystemParams) -> float:
    P_eq = np.full(ctx.n, params.uav_max_tx_power_w / ctx.n)
    r = rate(params.dl_bandwidth_hz, sinr(ctx.cross, P_eq, params.noise_power_w))
    return float(np.max(params.hover_power_w * ctx.demand_bits / r))


def rho_bounds(ctx: PowerContext, params: SystemParams, exact: bool = True) -> tuple[float, float]:
    P_hov, B = params.hover_power_w, params.dl_bandwidth_hz
    g = np.diag(ctx.cross)
    if exact:
        # nobody finishes faster than alone on the full budget
        fastest = B * np.log2(1.0 + params.uav_max_tx_power_w * g / params.noise_power_w)
        floor = np.max(P_hov * ctx.demand_bits / fastest)
    else:
        floor = np.max(P_hov * ctx.demand_bits / (B * g))
    return max(ctx.e2, float(floor)), max(equal_split_rho(ctx, params), ctx.e2)


def _feasible(P, budget: float) -> bool:
    return P is not None and bool(np.all(P >= 0)) and float(P.sum()) <= budget * (1 + 1e-12)


def allocate_power(ctx: PowerContext, params: SystemParams, exact: bool = True) -> PowerAllocation:
    """Smallest feasible rho by bisection, returning the matching power split.

    Feasibility of a trial rho is the budget (sum P <= P_k) plus non-negativity.
    With ``exact`` the powers at each trial rho solve the coupled SINR targets of
    all users; otherwise the stationarity relation is swept once per trial with
    interference from the last accepted powers (starting at an equal split).
    """
    n = ctx.n
    if n == 0:
        return PowerAllocation({}, rho_star=ctx.e2)
    budget = params.uav_max_tx_power_w
    rho_min, rho_max = rho_bounds(ctx, params, exact)
    equal = np.full(n, budget / n)
    current = equal

    def solve(rho):
        return _coupled_powers(rho, ctx, params) if exact else _printed_powers(rho, ctx, params, current)

    best = solve(rho_max)
    feasible = _feasible(best, budget)
    if not feasible:
        return PowerAllocation(dict(zip(ctx.users.tolist(), equal.tolist())), rho_star=rho_max,
                               feasible=False, powers=equal)
    current = best
    iterations = 0
    while rho_max - rho_min > params.bisect_tol:
        rho = 0.5 * (rho_max + rho_min)
        P = solve(rho)
        iterations += 1
        if _feasible(P, budget):
            rho_max, best, current = rho, P, P
        else:
            rho_min = rho
    return PowerAllocation(dict(zip(ctx.users.tolist(), best.tolist())), rho_star=rho_max,
                           iterations=iterations, powers=best)


def p1p_objective(powers, ctx: PowerContext, params: SystemParams) -> float:
    """max(hover-weighted download times, E2) plus transmit energy, for a power split."""
    P = np.asarray(powers, dtype=float)
    r = rate(params.dl_bandwidth_hz, sinr(ctx.cross, P, params.noise_power_w))
    times = ctx.demand_bits / r
    return max(float(np.max(params.hover_power_w * times)), ctx.e2) + float(np.sum(P * times))
