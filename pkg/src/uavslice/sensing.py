"""Spatially-correlated information model for the sensing tenant.

Users are credited in ascending index order: the first active user contributes
the full raw volume ``L``; every later active user contributes
``L * (1 - 1 / (d / rho + 1))`` where ``d`` is its distance to the closest
earlier active user.
"""

from __future__ import annotations

import numpy as np


def _credited(positions: np.ndarray, L: float, rho: float) -> float:
    n = len(positions)
    if n == 0:
        return 0.0
    if n == 1:
        return float(L)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    # nearest earlier user for rows 1..n-1
    dist[np.triu_indices(n)] = np.inf
    nearest = dist[1:].min(axis=1)
    return float(L + L * np.sum(1.0 - 1.0 / (nearest / rho + 1.0)))


def max_information(sensing_positions, L: float, rho: float) -> float:
    """Information H gathered when every sensing user is active."""
    pos = np.asarray(sensing_positions, dtype=float).reshape(-1, 2)
    return _credited(pos, L, rho)


def gathered_information(activation, sensing_positions, L: float, rho: float) -> float:
    """Information of the active subset; zero when nobody is active."""
    act = np.asarray(activation, dtype=bool)
    pos = np.asarray(sensing_positions, dtype=float).reshape(-1, 2)
    if act.shape != (len(pos),):
        raise ValueError(f"activation length {act.shape} does not match {len(pos)} sensing users")
    return _credited(pos[act], L, rho)


def marginal_information(activation, candidate: int, sensing_positions, L: float, rho: float) -> float:
    """Gain in gathered information from additionally activating ``candidate``."""
    act = np.array(activation, dtype=bool)
    if act[candidate]:
        raise ValueError(f"sensing user {candidate} is already active")
    before = gathered_information(act, sensing_positions, L, rho)
    act[candidate] = True
    return gathered_information(act, sensing_positions, L, rho) - before
