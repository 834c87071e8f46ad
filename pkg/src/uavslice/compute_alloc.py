"""CPU-speed split of one UAV among its offloading MEC users (bisection on lambda)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .power_alloc import InfeasibleMultiplier
from .scenario import SystemParams


@dataclass
class ComputeContext:
    users: np.ndarray
    uplink_rates: np.ndarray
    task_bits: np.ndarray
    cycles_per_bit: np.ndarray
    e1: float = 0.0

    @classmethod
    def build(cls, users, uplink_rates, params: SystemParams, e1: float = 0.0) -> "ComputeContext":
        users = np.asarray(users, dtype=int)
        n = len(users)
        return cls(users, np.asarray(uplink_rates, dtype=float), np.full(n, params.task_bits),
                   np.full(n, params.cycles_per_bit), float(e1))

    @property
    def n(self) -> int:
        return len(self.users)


@dataclass
class ComputeAllocation:
    per_user_hz: dict
    lambda_star: float
    feasible: bool = True
    iterations: int = 0
    speeds: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)

    @property
    def total_hz(self) -> float:
        return float(sum(self.per_user_hz.values()))

    def to_dict(self) -> dict:
        return {"per_user_hz": {str(k): v for k, v in self.per_user_hz.items()},
                "lambda_star": self.lambda_star, "feasible": self.feasible}


def compute_e1(download_times, upload_times, params: SystemParams) -> float:
    """Hover-power-weighted duration of the UAV's content downloads and sensing uploads."""
    times = np.concatenate([np.ravel(download_times), np.ravel(upload_times)])
    return params.hover_power_w * float(times.max()) if len(times) else 0.0


def speed_closed_form(lam: float, uplink_rate: float, params: SystemParams, task_bits: float | None = None,
                      cycles_per_bit: float | None = None, associated: bool = True) -> float:
    """CPU speed at which the user's hover-weighted offload latency equals ``lam``."""
    if not associated:
        return 0.0
    ell = params.task_bits if task_bits is None else task_bits
    cyc = params.cycles_per_bit if cycles_per_bit is None else cycles_per_bit
    P_hov = params.hover_power_w
    denom = lam - P_hov * ell / uplink_rate
    if denom <= 0:
        raise InfeasibleMultiplier(f"lambda={lam} does not exceed the upload term {P_hov * ell / uplink_rate}")
    return ell * cyc * P_hov / denom


def _speeds(lam: float, ctx: ComputeContext, params: SystemParams) -> np.ndarray | None:
    P_hov = params.hover_power_w
    denom = lam - P_hov * ctx.task_bits / ctx.uplink_rates
    if np.any(denom <= 0):
        return None
    return ctx.task_bits * ctx.cycles_per_bit * P_hov / denom


def lambda_bounds(ctx: ComputeContext, params: SystemParams) -> tuple[float, float]:
    P_hov = params.hover_power_w
    upload = P_hov * ctx.task_bits / ctx.uplink_rates
    equal = params.uav_compute_hz / ctx.n
    lam_F = float(np.max(upload + P_hov * ctx.task_bits * ctx.cycles_per_bit / equal))
    return max(ctx.e1, float(np.max(upload))), max(lam_F, ctx.e1)


def allocate_compute(ctx: ComputeContext, params: SystemParams) -> ComputeAllocation:
    """Smallest feasible lambda by bisection; feasibility is sum f <= F_k with f >= 0."""
    n = ctx.n
    if n == 0:
        return ComputeAllocation({}, lambda_star=ctx.e1)
    budget = params.uav_compute_hz
    lam_min, lam_max = lambda_bounds(ctx, params)
    best = _speeds(lam_max, ctx, params)
    if best is None or best.sum() > budget * (1 + 1e-12):
        equal = np.full(n, budget / n)
        return ComputeAllocation(dict(zip(ctx.users.tolist(), equal.tolist())), lambda_star=lam_max,
                                 feasible=False, speeds=equal)
    iterations = 0
    while lam_max - lam_min > params.compute_tol:
        lam = 0.5 * (lam_max + lam_min)
        f = _speeds(lam, ctx, params)
        iterations += 1
        if f is not None and f.sum() <= budget * (1 + 1e-12):
            lam_max, best = lam, f
        else:
            lam_min = lam
    return ComputeAllocation(dict(zip(ctx.users.tolist(), best.tolist())), lambda_star=lam_max,
                             iterations=iterations, speeds=best)


def p2f_objective(speeds, ctx: ComputeContext, params: SystemParams) -> float:
    """max(hover-weighted offload latencies, E1) plus computing energy, for a speed split."""
    f = np.asarray(speeds, dtype=float)
    lat = params.hover_power_w * (ctx.task_bits / ctx.uplink_rates + ctx.task_bits * ctx.cycles_per_bit / f)
    comp = params.switched_capacitance * np.sum(ctx.task_bits * ctx.cycles_per_bit * f ** 2)
    return max(float(np.max(lat)), ctx.e1) + float(comp)
