"""Rician user-UAV channels, MRT/MRC beamforming, SINR and achievable rates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario, SystemParams, User

# Rician factors at or above this are treated as pure line of sight.
PURE_LOS_FACTOR = 1e9


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray   # (A,) complex
    distance_m: float


@dataclass(frozen=True)
class ChannelSet:
    """Channel realizations for one placement vector, keyed by (user, uav)."""
    realizations: dict

    def __getitem__(self, key) -> ChannelRealization:
        return self.realizations[key]

    def matrix(self, users, uav: int) -> np.ndarray:
        return np.array([self.realizations[(i, uav)].gains for i in users]).reshape(len(users), -1)


def los_steering(user_pos, uav_pos, antennas: int) -> np.ndarray:
    user_pos = np.asarray(user_pos, dtype=float)
    uav_pos = np.asarray(uav_pos, dtype=float)
    dist = np.linalg.norm(uav_pos - user_pos)
    if dist == 0:
        raise ValueError("user and UAV positions coincide")
    cos_phi = (uav_pos[0] - user_pos[0]) / dist
    return np.exp(-1j * np.pi * np.arange(antennas) * cos_phi)


def _mix(params: SystemParams) -> tuple[float, float]:
    F = params.rician_factor
    if F >= PURE_LOS_FACTOR:
        return 1.0, 0.0
    return np.sqrt(F / (F + 1.0)), np.sqrt(1.0 / (F + 1.0))


def rayleigh(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channel(user: User, uav_pos, params: SystemParams, rng: np.random.Generator) -> ChannelRealization:
    uav_pos = np.asarray(uav_pos, dtype=float)
    if uav_pos[2] <= 0:
        raise ValueError("UAV altitude must be positive")
    user_pos = np.array([*user.position, 0.0])
    A = int(params.antennas_per_uav)
    d = float(np.linalg.norm(uav_pos - user_pos))
    a_los, a_nlos = _mix(params)
    nlos = rayleigh(rng, A)
    h = np.sqrt(params.pathloss_ref * d ** -params.pathloss_exp) * (a_los * los_steering(user_pos, uav_pos, A)
                                                                   + a_nlos * nlos)
    return ChannelRealization(h, d)


class ChannelField:
    """Frozen small-scale fading for one Monte Carlo trial.

    The scattering component of every (user, UAV) pair is drawn once; the
    path loss and line-of-sight phase follow whatever placement is asked for.
    This keeps a solver run on one static channel while letting it move UAVs.
    """

    def __init__(self, scenario: Scenario, rng: np.random.Generator):
        p = scenario.params
        self.params = p
        self.positions = scenario.positions
        A = int(p.antennas_per_uav)
        self.antennas = A
        self._steps = np.arange(A)
        self._a_los, a_nlos = _mix(p)
        self.nlos = a_nlos * rayleigh(rng, (scenario.n_users, scenario.n_uavs, A))
        self._ref = p.pathloss_ref
        self._beta = p.pathloss_exp

    @classmethod
    def for_scenario(cls, scenario: Scenario, stream: int = 0) -> "ChannelField":
        """Deterministic fading derived from the scenario seed."""
        seq = np.random.SeedSequence([int(scenario.seed) & 0xFFFFFFFF, 0xC4A7, int(stream)])
        return cls(scenario, np.random.default_rng(seq))

    def gains(self, uav: int, uav_pos, users) -> np.ndarray:
        """(len(users), A) channel matrix for the given users toward UAV ``uav`` at ``uav_pos``."""
        users = np.asarray(users, dtype=int)
        xy = self.positions[users]
        dx = uav_pos[0] - xy[:, 0]
        dy = uav_pos[1] - xy[:, 1]
        d = np.sqrt(dx * dx + dy * dy + uav_pos[2] * uav_pos[2])
        cos_phi = dx / d
        los = np.exp(-1j * np.pi * np.outer(cos_phi, self._steps))
        amp = np.sqrt(self._ref * d ** -self._beta)
        return amp[:, None] * (self._a_los * los + self.nlos[users, uav])

    def realize(self, placements: dict, association=None) -> ChannelSet:
        """ChannelSet for UAV placements ``{uav: (x, y, z)}`` (all users, or associated pairs only)."""
        out = {}
        n = len(self.positions)
        for k, pos in placements.items():
            users = range(n) if association is None else np.flatnonzero(association[:, k])
            if len(users) == 0:
                continue
            H = self.gains(k, pos, list(users))
            pos = np.asarray(pos, dtype=float)
            for row, i in enumerate(users):
                d = float(np.sqrt(np.sum((pos[:2] - self.positions[i]) ** 2) + pos[2] ** 2))
                out[(int(i), int(k))] = ChannelRealization(H[row], d)
        return ChannelSet(out)


# -- beamforming and rates -------------------------------------------------------

def mrt(H: np.ndarray) -> np.ndarray:
    """Unit-norm matched beamformers, one per row of H."""
    H = np.atleast_2d(H)
    return H / np.linalg.norm(H, axis=1, keepdims=True)


def cross_gains(H: np.ndarray) -> np.ndarray:
    """G[i, j] = |h_i^H w_j|^2 with MRT/MRC vectors w_j = h_j / ||h_j||."""
    H = np.atleast_2d(H)
    return np.abs(H.conj() @ mrt(H).T) ** 2


def sinr(G: np.ndarray, powers, noise: float) -> np.ndarray:
    """Per-user SINR given the cross-gain matrix and transmit powers."""
    powers = np.asarray(powers, dtype=float)
    off = G.copy()
    np.fill_diagonal(off, 0.0)
    return np.diag(G) * powers / (off @ powers + noise)


def rate(bandwidth: float, gamma) -> np.ndarray:
    return bandwidth * np.log2(1.0 + np.asarray(gamma))


def downlink_rate(H, associated, powers, target: int, params: SystemParams) -> tuple[float, float]:
    """SINR and rate of ``target`` served by one UAV.

    ``H`` holds one channel row per user of the UAV's user list, ``associated``
    flags which of them the UAV serves, ``powers`` their transmit powers.
    """
    associated = np.asarray(associated, dtype=bool)
    if not associated[target]:
        raise ValueError(f"user {target} is not associated with this UAV")
    idx = np.flatnonzero(associated)
    G = cross_gains(np.asarray(H)[idx])
    p = np.asarray(powers, dtype=float)[idx]
    if np.any(p < 0):
        raise ValueError("transmit powers must be non-negative")
    g = sinr(G, p, params.noise_power_w)[np.searchsorted(idx, target)]
    return float(g), float(rate(params.dl_bandwidth_hz, g))


def uplink_rate(H, associated, active, target: int, params: SystemParams) -> tuple[float, float]:
    """SINR and rate of ``target`` received by one UAV under MRC.

    ``active`` marks users currently transmitting (MEC users, and sensing users
    with eta = 1); inactive users neither transmit nor may be queried.
    """
    associated = np.asarray(associated, dtype=bool)
    active = np.asarray(active, dtype=bool)
    if not associated[target]:
        raise ValueError(f"user {target} is not associated with this UAV")
    if not active[target]:
        raise ValueError(f"user {target} is not an active uplink user")
    idx = np.flatnonzero(associated & active)
    G = cross_gains(np.asarray(H)[idx])
    p = np.full(len(idx), params.user_tx_power_w)
    g = sinr(G, p, params.noise_power_w)[np.searchsorted(idx, target)]
    return float(g), float(rate(params.ul_bandwidth_hz, g))
