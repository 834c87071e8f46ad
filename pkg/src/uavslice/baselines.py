"""Comparator solvers: random deployment, exhaustive enumeration and K-means placement."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .channel import ChannelField
from .scenario import Scenario
from .sensing import gathered_information
from .slicer import _check_servable, place_over
from .solution import InfeasibleError, SliceSolution, assemble_solution


def _placements(scenario: Scenario, association: np.ndarray, uavs, centers=None) -> dict:
    """Placement of each UAV: over ``centers[k]`` (default centroid of its users), z_min when idle."""
    p = scenario.params
    out = {}
    for k in uavs:
        users = np.flatnonzero(association[:, k])
        center = None if centers is None else centers[k]
        if len(users):
            out[k] = place_over(scenario.positions[users], p, center)
        else:
            xy = scenario.docks[k, :2] if center is None else np.asarray(center)[:2]
            out[k] = np.array([xy[0], xy[1], p.altitude_min_m])
    return out


def random_solution(scenario: Scenario, field: ChannelField | None = None, seed: int = 0) -> SliceSolution:
    """Every UAV hovers over a random user; users join the nearest UAV able to serve them."""
    _check_servable(scenario)
    field = ChannelField.for_scenario(scenario) if field is None else field
    rng = np.random.default_rng(np.random.SeedSequence([int(scenario.seed) & 0xFFFFFFFF, 0xA11D, int(seed)]))
    N, U = scenario.n_users, scenario.n_uavs
    pos = scenario.positions
    if N:
        centers = pos[rng.integers(N, size=U)]
    else:
        centers = scenario.docks[:, :2].copy()
    dist = np.hypot(pos[:, None, 0] - centers[None, :, 0], pos[:, None, 1] - centers[None, :, 1])
    allowed = np.ones((N, U), dtype=bool)
    allowed[:scenario.n_content] = scenario.can_serve()
    nearest = np.argmin(np.where(allowed, dist, np.inf), axis=1)
    mu = np.zeros((N, U), dtype=bool)
    mu[np.arange(N), nearest] = True
    eta = np.ones(scenario.n_sensing, dtype=bool)
    placements = _placements(scenario, mu, range(U), {k: centers[k] for k in range(U)})
    return assemble_solution(scenario, field, mu, eta, placements, deployed=tuple(range(U)),
                             allocate=False, solver="random")


@dataclass(frozen=True)
class ExhaustiveLimits:
    n_users: int = 7
    n_uavs: int = 3
    n_sensing: int = 3

    @classmethod
    def parse(cls, text: str) -> "ExhaustiveLimits":
        """``N=7,U=3,Ns=3`` style overrides."""
        keys = {"N": "n_users", "U": "n_uavs", "Ns": "n_sensing"}
        vals = {}
        for part in filter(None, (s.strip() for s in text.split(","))):
            key, _, raw = part.partition("=")
            if key.strip() not in keys:
                raise ValueError(f"unknown exhaustive limit {key!r} (expected N, U or Ns)")
            vals[keys[key.strip()]] = int(raw)
        return cls(**vals)


class LimitExceeded(ValueError):
    """Instance too large for exhaustive enumeration."""


def sensing_activations(scenario: Scenario):
    """Activation vectors meeting the information requirement."""
    p = scenario.params
    pos = scenario.sensing_positions()
    for bits in itertools.product((False, True), repeat=scenario.n_sensing):
        eta = np.array(bits, dtype=bool)
        if gathered_information(eta, pos, p.raw_data_bits, p.correlation_extent_m) >= scenario.required_info:
            yield eta


def exhaustive_search(scenario: Scenario, field: ChannelField | None = None,
                      limits: ExhaustiveLimits = ExhaustiveLimits()) -> SliceSolution:
    """Minimum-energy solution over every activation and association.

    Placement follows the same centroid and altitude rule as the heuristic, and
    each candidate gets the same power and CPU allocators.
    """
    N, U, n_s = scenario.n_users, scenario.n_uavs, scenario.n_sensing
    if N > limits.n_users or U > limits.n_uavs or n_s > limits.n_sensing:
        raise LimitExceeded(f"instance N={N}, U={U}, N_s={n_s} exceeds exhaustive limits {limits}")
    _check_servable(scenario)
    field = ChannelField.for_scenario(scenario) if field is None else field
    n_c = scenario.n_content
    content_choices = [np.flatnonzero(row).tolist() for row in scenario.can_serve()]
    mec = list(scenario.mec_idx)
    best, count = None, 0
    for eta in sensing_activations(scenario):
        active = [n_c + j for j in np.flatnonzero(eta)]
        others = active + mec
        for c_pick in itertools.product(*content_choices):
            for o_pick in itertools.product(range(U), repeat=len(others)):
                mu = np.zeros((N, U), dtype=bool)
                mu[np.arange(n_c), c_pick] = True
                mu[others, o_pick] = True
                deployed = tuple(int(k) for k in np.flatnonzero(mu.any(axis=0)))
                sol = assemble_solution(scenario, field, mu, eta, _placements(scenario, mu, deployed), deployed,
                                        solver="exhaustive")
                count += 1
                if best is None or sol.objective_j < best.objective_j:
                    best = sol
    if best is None:
        raise InfeasibleError("no activation meets the information requirement")
    best.meta = {"candidates": count}
    return best


def kmeans(points: np.ndarray, K: int, rng: np.random.Generator, max_iter: int = 100,
           tol_m: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd iterations; returns (centroids, labels). Empty clusters restart at the farthest point."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= {n} points, got K={K}")
    centers = points[rng.choice(n, size=K, replace=False)].copy()
    labels = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        d = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
        labels = np.argmin(d, axis=1)
        new = centers.copy()
        for c in range(K):
            members = labels == c
            if members.any():
                new[c] = points[members].mean(axis=0)
            else:
                far = int(np.argmax(d[np.arange(n), labels]))
                new[c] = points[far]
                labels[far] = c
        shift = float(np.max(np.linalg.norm(new - centers, axis=1)))
        centers = new
        if shift < tol_m:
            break
    d = np.linalg.norm(points[:, None, :] - centers[None, :, :], axis=2)
    labels = np.argmin(d, axis=1)
    return centers, labels


def covering_subset(scenario: Scenario, K: int) -> tuple:
    """First K-subset of UAVs (lexicographic) that can serve every content user."""
    serve = scenario.can_serve()
    for combo in itertools.combinations(range(scenario.n_uavs), K):
        if serve[:, combo].any(axis=1).all():
            return combo
    raise InfeasibleError(f"no {K} UAVs store every demanded content")


def kmeans_solution(scenario: Scenario, field: ChannelField | None = None, K: int | None = None,
                    seed: int = 0) -> SliceSolution:
    """Cluster users into K groups and serve each group with one UAV at its centroid."""
    U, N, n_c = scenario.n_uavs, scenario.n_users, scenario.n_content
    K = U if K is None else int(K)
    if not 1 <= K <= U:
        raise ValueError(f"K={K} outside 1..{U}")
    _check_servable(scenario)
    field = ChannelField.for_scenario(scenario) if field is None else field
    uavs = covering_subset(scenario, K)
    rng = np.random.default_rng(np.random.SeedSequence([int(scenario.seed) & 0xFFFFFFFF, 0x6EA5, int(seed)]))
    pos = scenario.positions
    centers, labels = kmeans(pos, K, rng)
    # cluster -> UAV, keeping as many content users with a storing UAV as possible
    serve = scenario.can_serve()
    score = np.array([[serve[(labels[:n_c] == c), k].sum() for k in uavs] for c in range(K)])
    rows, cols = linear_sum_assignment(score, maximize=True)
    uav_of = {int(r): uavs[int(c)] for r, c in zip(rows, cols)}
    center_of = {uav_of[c]: centers[c] for c in range(K)}
    mu = np.zeros((N, U), dtype=bool)
    mu[np.arange(N), [uav_of[int(c)] for c in labels]] = True
    for i in range(n_c):
        k = uav_of[int(labels[i])]
        if not serve[i, k]:
            ok = [u for u in uavs if serve[i, u]]
            d = [np.hypot(*(pos[i] - center_of[u])) for u in ok]
            mu[i, k] = False
            mu[i, ok[int(np.argmin(d))]] = True
    eta = np.ones(scenario.n_sensing, dtype=bool)
    placements = _placements(scenario, mu, uavs, center_of)
    return assemble_solution(scenario, field, mu, eta, placements, deployed=tuple(uavs), solver="kmeans")
