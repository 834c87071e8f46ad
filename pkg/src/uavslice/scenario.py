"""World model: system parameters, users, UAVs, content catalog and instance generation."""

from __future__ import annotations

import dataclasses
import enum
import functools
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .sensing import max_information


class ScenarioError(ValueError):
    """Raised when an instance cannot be constructed."""


class ConfigError(ValueError):
    """Raised on a malformed or invalid configuration document."""


@dataclass(frozen=True)
class SystemParams:
    # Propagation
    pathloss_ref_db: float = -30.0
    pathloss_exp: float = 2.2
    rician_factor: float = 10.0
    # Radio
    dl_bandwidth_hz: float = 1e6
    ul_bandwidth_hz: float = 1e6
    uav_max_tx_power_w: float = 1.0
    uav_compute_hz: float = 4e9
    antennas_per_uav: int = 8
    user_tx_power_w: float = 0.1
    noise_power_w: float = 1e-13  # -100 dBm
    switched_capacitance: float = 1e-28
    # Sensing tenant
    raw_data_bits: float = 1e6
    correlation_extent_m: float = 100.0
    required_info_bits: float | None = None  # absolute I; None -> fraction of H
    required_info_fraction: float = 0.75
    # Content and MEC tenants
    content_size_bits: float = 5e8
    storage_fraction: float = 0.75
    task_bits: float = 1e6
    cycles_per_bit: float = 700.0
    # Rotary-wing propulsion
    uav_speed_mps: float = 12.0
    tip_speed_mps: float = 120.0
    induced_velocity_mps: float = 4.03
    fuselage_drag_ratio: float = 0.6
    rotor_solidity: float = 0.05
    air_density_kgm3: float = 1.225
    rotor_disc_area_m2: float = 0.503
    profile_power_w: float = 79.86
    induced_power_w: float = 88.63
    # Placement
    altitude_min_m: float = 50.0
    altitude_max_m: float = 300.0
    elevation_angle_deg: float = 42.44
    area_side_m: float = 1200.0
    # Solver
    bisect_tol: float = 0.01
    bisect_tol_compute: float | None = None
    restarts: int = 20

    @property
    def hover_power_w(self) -> float:
        return self.profile_power_w + self.induced_power_w

    @property
    def pathloss_ref(self) -> float:
        return 10.0 ** (self.pathloss_ref_db / 10.0)

    @property
    def compute_tol(self) -> float:
        return self.bisect_tol if self.bisect_tol_compute is None else self.bisect_tol_compute

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


_STRICTLY_POSITIVE = (
    "dl_bandwidth_hz", "ul_bandwidth_hz", "uav_max_tx_power_w", "uav_compute_hz",
    "antennas_per_uav", "user_tx_power_w", "noise_power_w", "switched_capacitance",
    "raw_data_bits", "correlation_extent_m", "content_size_bits", "task_bits",
    "cycles_per_bit", "uav_speed_mps", "tip_speed_mps", "induced_velocity_mps",
    "fuselage_drag_ratio", "rotor_solidity", "air_density_kgm3", "rotor_disc_area_m2",
    "profile_power_w", "induced_power_w", "altitude_min_m", "altitude_max_m",
    "area_side_m", "bisect_tol", "restarts",
)


def validate_params(params: SystemParams) -> list[str]:
    """Return a list of human-readable invariant violations (empty when valid)."""
    problems = []
    for name in _STRICTLY_POSITIVE:
        value = getattr(params, name)
        if not (math.isfinite(value) and value > 0):
            problems.append(f"{name} must be strictly positive, got {value!r}")
    if params.rician_factor < 0 or not math.isfinite(params.pathloss_ref_db):
        problems.append("rician_factor must be >= 0 and pathloss_ref_db finite")
    if params.pathloss_exp <= 0:
        problems.append(f"pathloss_exp must be positive, got {params.pathloss_exp!r}")
    if params.bisect_tol_compute is not None and not params.bisect_tol_compute > 0:
        problems.append("bisect_tol_compute must be strictly positive")
    if params.altitude_min_m >= params.altitude_max_m:
        problems.append(
            f"altitude_min_m ({params.altitude_min_m}) must be below altitude_max_m ({params.altitude_max_m})")
    if not 0 < params.elevation_angle_deg < 90:
        problems.append(f"elevation_angle_deg must lie in (0, 90), got {params.elevation_angle_deg!r}")
    if not 0 < params.storage_fraction <= 1:
        problems.append(f"storage_fraction must lie in (0, 1], got {params.storage_fraction!r}")
    if params.required_info_bits is not None and params.required_info_bits < 0:
        problems.append("required_info_bits must be non-negative")
    if not 0 <= params.required_info_fraction <= 1:
        problems.append("required_info_fraction must lie in [0, 1]")
    if int(params.antennas_per_uav) != params.antennas_per_uav:
        problems.append("antennas_per_uav must be an integer")
    if int(params.restarts) != params.restarts:
        problems.append("restarts must be an integer")
    return problems


class Role(enum.Enum):
    CONTENT = "content"
    SENSING = "sensing"
    MEC = "mec"


@dataclass(frozen=True)
class User:
    id: int
    role: Role
    position: tuple[float, float]


@dataclass(frozen=True)
class Uav:
    id: int
    docking_position: tuple[float, float, float]


class Counts(NamedTuple):
    n_content: int
    n_sensing: int
    n_mec: int
    n_uavs: int
    n_contents: int

    @property
    def n_users(self) -> int:
        return self.n_content + self.n_sensing + self.n_mec


DEFAULT_COUNTS = Counts(9, 9, 9, 5, 4)


def split_roles(n_users: int) -> tuple[int, int, int]:
    """Thirds per tenant; remainder goes to content first, then sensing."""
    base, rem = divmod(n_users, 3)
    return base + (rem > 0), base + (rem > 1), base


def _frozen(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Scenario:
    params: SystemParams
    users: tuple[User, ...]
    uavs: tuple[Uav, ...]
    demand: np.ndarray      # (N_c, C) bool, r_ij
    storage: np.ndarray     # (C, U) bool, s_jk
    seed: int
    required_info: float = field(default=0.0)
    content_sizes: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "demand", _frozen(np.asarray(self.demand, dtype=bool)))
        object.__setattr__(self, "storage", _frozen(np.asarray(self.storage, dtype=bool)))
        n_contents = self.storage.shape[0]
        sizes = self.content_sizes
        if sizes is None:
            sizes = np.full(n_contents, self.params.content_size_bits)
        object.__setattr__(self, "content_sizes", _frozen(np.asarray(sizes, dtype=float)))
        pos = np.array([u.position for u in self.users], dtype=float).reshape(-1, 2)
        object.__setattr__(self, "_positions", _frozen(pos))
        docks = np.array([u.docking_position for u in self.uavs], dtype=float).reshape(-1, 3)
        object.__setattr__(self, "_docks", _frozen(docks))
        self._check()

    def _check(self):
        roles = [u.role for u in self.users]
        n_c, n_s = self.n_content, self.n_sensing
        expected = [Role.CONTENT] * n_c + [Role.SENSING] * n_s + [Role.MEC] * self.n_mec
        if roles != expected:
            raise ScenarioError("users must be ordered content, sensing, MEC")
        if [u.id for u in self.users] != list(range(len(self.users))):
            raise ScenarioError("user ids must be 0..N-1 in order")
        if self.demand.shape != (n_c, self.storage.shape[0]):
            raise ScenarioError(f"demand shape {self.demand.shape} does not match (N_c, C)")
        if self.storage.shape[1] != len(self.uavs):
            raise ScenarioError(f"storage shape {self.storage.shape} does not match (C, U)")
        if self.content_sizes.shape != (self.storage.shape[0],) or np.any(self.content_sizes <= 0):
            raise ScenarioError("content sizes must be positive, one per content")
        if np.any(self.demand.sum(axis=1) < 1):
            raise ScenarioError("every content user must demand at least one content")
        if np.any(self.storage.sum(axis=1) < 1):
            raise ScenarioError("every content must be stored on at least one UAV")
        side = self.params.area_side_m
        if np.any(self._positions < 0) or np.any(self._positions > side):
            raise ScenarioError("user positions must lie inside the square area")
        if np.any(self._docks[:, 2] < 0):
            raise ScenarioError("docking altitude must be non-negative")
        h_max = self.max_information()
        if not 0 <= self.required_info <= h_max * (1 + 1e-12):
            raise ScenarioError(f"required information {self.required_info} outside [0, H={h_max}]")

    # -- views -----------------------------------------------------------
    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def n_uavs(self) -> int:
        return len(self.uavs)

    @property
    def n_contents(self) -> int:
        return self.storage.shape[0]

    @functools.cached_property
    def n_content(self) -> int:
        return sum(u.role is Role.CONTENT for u in self.users)

    @functools.cached_property
    def n_sensing(self) -> int:
        return sum(u.role is Role.SENSING for u in self.users)

    @functools.cached_property
    def n_mec(self) -> int:
        return sum(u.role is Role.MEC for u in self.users)

    @property
    def counts(self) -> Counts:
        return Counts(self.n_content, self.n_sensing, self.n_mec, self.n_uavs, self.n_contents)

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def docks(self) -> np.ndarray:
        return self._docks

    @property
    def content_idx(self) -> range:
        return range(0, self.n_content)

    @property
    def sensing_idx(self) -> range:
        return range(self.n_content, self.n_content + self.n_sensing)

    @property
    def mec_idx(self) -> range:
        return range(self.n_content + self.n_sensing, self.n_users)

    @functools.cached_property
    def _demand_bits(self) -> np.ndarray:
        return _frozen(self.demand.astype(float) @ self.content_sizes)

    @functools.cached_property
    def _can_serve(self) -> np.ndarray:
        return _frozen(self.demand.astype(int) @ (~self.storage).astype(int) == 0)

    def demand_bits(self) -> np.ndarray:
        """Total requested bits per content user."""
        return self._demand_bits

    def can_serve(self) -> np.ndarray:
        """(N_c, U) bool: UAV stores every content the user demands."""
        return self._can_serve

    def sensing_positions(self) -> np.ndarray:
        return self._positions[self.n_content:self.n_content + self.n_sensing]

    def max_information(self) -> float:
        p = self.params
        return max_information(self.sensing_positions(), p.raw_data_bits, p.correlation_extent_m)

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": "uavslice.scenario/1",
            "seed": int(self.seed),
            "params": dataclasses.asdict(self.params),
            "users": [{"id": u.id, "role": u.role.value, "position": list(u.position)} for u in self.users],
            "uavs": [{"id": u.id, "docking_position": list(u.docking_position)} for u in self.uavs],
            "demand": self.demand.astype(int).tolist(),
            "storage": self.storage.astype(int).tolist(),
            "content_sizes": self.content_sizes.tolist(),
            "required_info": self.required_info,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict) -> "Scenario":
        if doc.get("format") != "uavslice.scenario/1":
            raise ScenarioError(f"unrecognized scenario format {doc.get('format')!r}")
        params = SystemParams(**doc["params"])
        users = tuple(User(u["id"], Role(u["role"]), tuple(u["position"])) for u in doc["users"])
        uavs = tuple(Uav(u["id"], tuple(u["docking_position"])) for u in doc["uavs"])
        n_c = sum(u.role is Role.CONTENT for u in users)
        demand = np.array(doc["demand"], dtype=bool).reshape(n_c, -1)
        storage = np.array(doc["storage"], dtype=bool).reshape(-1, len(uavs))
        return cls(params, users, uavs, demand, storage, doc["seed"],
                   required_info=doc["required_info"], content_sizes=doc["content_sizes"])

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))


def resolve_required_info(params: SystemParams, h_max: float) -> float:
    if params.required_info_bits is not None:
        return float(params.required_info_bits)
    return params.required_info_fraction * h_max


def storage_matrix(n_contents: int, n_uavs: int, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Random C x U storage with ceil(fraction*C) ones per column and every row covered."""
    per_uav = math.ceil(fraction * n_contents - 1e-9)
    per_uav = min(max(per_uav, 1), n_contents)
    if per_uav * n_uavs < n_contents:
        raise ScenarioError(
            f"storage fraction {fraction} with {n_uavs} UAV(s) cannot cover {n_contents} contents")
    storage = np.zeros((n_contents, n_uavs), dtype=bool)
    # Cover every content once (at most ceil(C/U) <= per_uav per column), then fill at random.
    for j, c in enumerate(rng.permutation(n_contents)):
        storage[c, j % n_uavs] = True
    for k in range(n_uavs):
        free = np.flatnonzero(~storage[:, k])
        need = per_uav - int(storage[:, k].sum())
        if need > 0:
            storage[rng.choice(free, size=need, replace=False), k] = True
    return storage


def generate_scenario(params: SystemParams, counts: Sequence[int], seed: int,
                      dock: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> Scenario:
    """Draw a random instance; a pure function of (params, counts, seed)."""
    counts = Counts(*counts)
    if min(counts) < 0 or counts.n_users < 1 or counts.n_uavs < 1 or counts.n_contents < 1:
        raise ScenarioError(f"invalid counts {tuple(counts)}")
    problems = validate_params(params)
    if problems:
        raise ScenarioError("; ".join(problems))
    rng = np.random.default_rng(seed)
    # Positions first so that varying U or C keeps the user layout for a fixed seed.
    positions = rng.uniform(0.0, params.area_side_m, size=(counts.n_users, 2))
    roles = ([Role.CONTENT] * counts.n_content + [Role.SENSING] * counts.n_sensing
             + [Role.MEC] * counts.n_mec)
    users = tuple(User(i, r, (float(x), float(y))) for i, (r, (x, y)) in enumerate(zip(roles, positions)))
    uavs = tuple(Uav(k, tuple(float(v) for v in dock)) for k in range(counts.n_uavs))
    demand = np.zeros((counts.n_content, counts.n_contents), dtype=bool)
    demand[np.arange(counts.n_content), rng.integers(0, counts.n_contents, size=counts.n_content)] = True
    storage = storage_matrix(counts.n_contents, counts.n_uavs, params.storage_fraction, rng)
    sensing = positions[counts.n_content:counts.n_content + counts.n_sensing]
    h_max = max_information(sensing, params.raw_data_bits, params.correlation_extent_m)
    required = resolve_required_info(params, h_max)
    if required > h_max * (1 + 1e-12):
        raise ScenarioError(f"required information {required} exceeds attainable H={h_max}")
    return Scenario(params, users, uavs, demand, storage, int(seed), required_info=min(required, h_max))


# -- configuration -----------------------------------------------------------

_ALIASES = {
    "lambda0": "pathloss_ref_db", "lambda_0": "pathloss_ref_db",
    "beta": "pathloss_exp", "F": "rician_factor",
    "B_k": "dl_bandwidth_hz", "B": "dl_bandwidth_hz", "B_bar": "ul_bandwidth_hz",
    "P_k": "uav_max_tx_power_w", "F_k": "uav_compute_hz", "A_k": "antennas_per_uav",
    "P_bar": "user_tx_power_w", "sigma2": "noise_power_w", "kappa": "switched_capacitance",
    "L": "raw_data_bits", "rho": "correlation_extent_m", "I": "required_info_bits",
    "M_j": "content_size_bits", "M": "content_size_bits", "gamma": "storage_fraction",
    "ell": "task_bits", "ell_i": "task_bits", "varsigma": "cycles_per_bit", "varsigma_i": "cycles_per_bit",
    "V": "uav_speed_mps", "varpi": "tip_speed_mps", "v0": "induced_velocity_mps", "v_0": "induced_velocity_mps",
    "delta0": "fuselage_drag_ratio", "delta_0": "fuselage_drag_ratio", "zeta": "rotor_solidity",
    "xi": "rotor_disc_area_m2", "P_prof": "profile_power_w", "P_ind": "induced_power_w",
    "z_min": "altitude_min_m", "z_max": "altitude_max_m", "theta_opt": "elevation_angle_deg",
    "epsilon": "bisect_tol", "eps": "bisect_tol", "Q": "restarts",
}

_COUNT_KEYS = {
    "N": "n_users", "n_users": "n_users",
    "N_c": "n_content", "n_content": "n_content",
    "N_s": "n_sensing", "n_sensing": "n_sensing",
    "N_m": "n_mec", "n_mec": "n_mec",
    "U": "n_uavs", "n_uavs": "n_uavs",
    "C": "n_contents", "n_contents": "n_contents",
}

_INT_FIELDS = {"antennas_per_uav", "restarts"}


def _parse_number(key: str, raw: str, lineno: int) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: value for {key!r} is not numeric: {raw!r}") from None


def load_config(text: str) -> tuple[SystemParams, Counts]:
    """Parse a flat ``key = value`` document (``#`` comments) into params and counts.

    Keys are SystemParams field names or their usual symbols (``beta``, ``rho``,
    ``z_min``...), plus instance sizes ``N``, ``N_c``, ``N_s``, ``N_m``, ``U``, ``C``.
    """
    names = {f.name: f for f in dataclasses.fields(SystemParams)}
    values: dict[str, float] = {}
    counts: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        raw = raw.strip("'\"")
        if key in _COUNT_KEYS:
            number = _parse_number(key, raw, lineno)
            if number != int(number) or number < 0:
                raise ConfigError(f"line {lineno}: {key} must be a non-negative integer")
            counts[_COUNT_KEYS[key]] = int(number)
            continue
        name = _ALIASES.get(key, key)
        if name not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if raw.lower() in ("none", "null", "") and name in ("required_info_bits", "bisect_tol_compute"):
            values[name] = None
            continue
        number = _parse_number(key, raw, lineno)
        if name in _INT_FIELDS:
            if number != int(number):
                raise ConfigError(f"line {lineno}: {key} must be an integer")
            number = int(number)
        values[name] = number
    params = SystemParams(**values)
    problems = validate_params(params)
    if problems:
        raise ConfigError("invalid parameters: " + "; ".join(problems))
    return params, _resolve_counts(counts)


def _resolve_counts(given: dict[str, int]) -> Counts:
    base = DEFAULT_COUNTS._asdict()
    if "n_users" in given:
        n_c, n_s, n_m = split_roles(given["n_users"])
        base.update(n_content=n_c, n_sensing=n_s, n_mec=n_m)
    for key in ("n_content", "n_sensing", "n_mec", "n_uavs", "n_contents"):
        if key in given:
            base[key] = given[key]
    counts = Counts(**base)
    if "n_users" in given and counts.n_users != given["n_users"]:
        raise ConfigError(f"N={given['n_users']} disagrees with N_c+N_s+N_m={counts.n_users}")
    if counts.n_users < 1 or counts.n_uavs < 1 or counts.n_contents < 1:
        raise ConfigError(f"invalid counts {tuple(counts)}")
    return counts
