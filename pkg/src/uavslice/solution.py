"""Slice decisions, feasibility checks, and the per-UAV resource/energy assembly shared by all solvers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import cross_gains, rate, sinr
from .compute_alloc import ComputeAllocation, ComputeContext, allocate_compute, compute_e1
from .energy import EnergyBreakdown, load_from_cross, uav_energy, uplink_rates
from .power_alloc import PowerAllocation, PowerContext, allocate_power, compute_e2
from .scenario import Scenario
from .sensing import gathered_information


class InfeasibleError(RuntimeError):
    """No feasible slice could be produced."""

    def __init__(self, message: str, report: "ValidationReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass
class SliceSolution:
    deployed: tuple
    placements: dict            # uav -> (x, y, z)
    association: np.ndarray     # (N, U) bool
    activation: np.ndarray      # (N_s,) bool
    power: dict                 # uav -> PowerAllocation
    compute: dict               # uav -> ComputeAllocation
    objective_j: float = float("nan")
    breakdown: EnergyBreakdown | None = None
    solver: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def n_deployed(self) -> int:
        return len(self.deployed)

    @property
    def n_active(self) -> int:
        return int(np.sum(self.activation))

    def users_of(self, uav: int) -> np.ndarray:
        return np.flatnonzero(self.association[:, uav])

    def to_dict(self) -> dict:
        doc = {
            "format": "uavslice.solution/1",
            "solver": self.solver,
            "deployed": [int(k) for k in self.deployed],
            "placements": {str(k): [float(v) for v in p] for k, p in self.placements.items()},
            "association": self.association.astype(int).tolist(),
            "activation": np.asarray(self.activation).astype(int).tolist(),
            "power": {str(k): a.to_dict() for k, a in self.power.items()},
            "compute": {str(k): a.to_dict() for k, a in self.compute.items()},
            "objective_j": self.objective_j,
            "meta": self.meta,
        }
        if self.breakdown is not None:
            doc["energy"] = self.breakdown.to_dict()
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict) -> "SliceSolution":
        if doc.get("format") != "uavslice.solution/1":
            raise ValueError(f"unrecognized solution format {doc.get('format')!r}")
        power = {int(k): PowerAllocation({int(i): float(v) for i, v in a["per_user_w"].items()},
                                         a["rho_star"], a.get("feasible", True))
                 for k, a in doc["power"].items()}
        compute = {int(k): ComputeAllocation({int(i): float(v) for i, v in a["per_user_hz"].items()},
                                             a["lambda_star"], a.get("feasible", True))
                   for k, a in doc["compute"].items()}
        return cls(
            deployed=tuple(doc["deployed"]),
            placements={int(k): np.array(p, dtype=float) for k, p in doc["placements"].items()},
            association=np.array(doc["association"], dtype=bool),
            activation=np.array(doc["activation"], dtype=bool),
            power=power, compute=compute, objective_j=doc.get("objective_j", float("nan")),
            solver=doc.get("solver", ""), meta=doc.get("meta", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "SliceSolution":
        return cls.from_dict(json.loads(text))


# -- feasibility -----------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    constraint: str
    description: str
    magnitude: float


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def add(self, constraint: str, description: str, magnitude: float = 1.0):
        self.violations.append(Violation(constraint, description, float(magnitude)))

    def __str__(self) -> str:
        if self.ok:
            return "feasible"
        return "; ".join(f"[{v.constraint}] {v.description} (magnitude {v.magnitude:g})" for v in self.violations)


CONSTRAINTS = (
    "content_served",       # every content user has a serving UAV
    "content_stored",       # serving UAVs store exactly the demanded contents
    "sensing_association",  # active sensing users on exactly one UAV, inactive on none
    "information",          # gathered information meets the requirement
    "power_budget",         # per-UAV downlink power budget
    "mec_association",      # every MEC user on exactly one UAV
    "compute_budget",       # per-UAV CPU budget
    "altitude",             # deployed UAVs inside the altitude band
    "binary",               # binary decisions, deployed set consistent and K <= U
)

_REL_TOL = 1e-9


def validate_solution(solution: SliceSolution, scenario: Scenario, channels=None) -> ValidationReport:
    """Check every constraint family of the slicing problem; violations are data, never raised."""
    report = ValidationReport()
    p = scenario.params
    N, U = scenario.n_users, scenario.n_uavs
    n_c, n_s = scenario.n_content, scenario.n_sensing
    mu = np.asarray(solution.association)
    eta = np.asarray(solution.activation)

    if mu.shape != (N, U) or eta.shape != (n_s,):
        report.add("binary", f"association shape {mu.shape} / activation shape {eta.shape} "
                             f"do not match ({N}, {U}) / ({n_s},)")
        return report
    if not (np.isin(mu, (0, 1)).all() and np.isin(eta, (0, 1)).all()):
        report.add("binary", "association and activation must be binary")
    mu = mu.astype(bool)
    eta = eta.astype(bool)
    deployed = set(int(k) for k in solution.deployed)
    if len(deployed) > U or any(not 0 <= k < U for k in deployed):
        report.add("binary", f"deployed set {sorted(deployed)} invalid for U={U}", max(0, len(deployed) - U))
    used = set(np.flatnonzero(mu.any(axis=0)).tolist())
    if not used <= deployed:
        report.add("binary", f"UAVs {sorted(used - deployed)} serve users but are not deployed", len(used - deployed))

    served = mu[:n_c].sum(axis=1)
    for i in np.flatnonzero(served < 1):
        report.add("content_served", f"content user {i} has no serving UAV")
    if n_c:
        covered = (mu[:n_c].astype(int) @ scenario.storage.T.astype(int) * scenario.demand).sum(axis=1)
        wanted = scenario.demand.sum(axis=1)
        for i in np.flatnonzero(covered != wanted):
            report.add("content_stored", f"content user {i}: demand {wanted[i]} but {covered[i]} stored deliveries",
                       abs(int(covered[i]) - int(wanted[i])))

    s_assoc = mu[n_c:n_c + n_s].sum(axis=1)
    for j in np.flatnonzero(s_assoc != eta.astype(int)):
        report.add("sensing_association", f"sensing user {n_c + j}: {s_assoc[j]} associations, eta={int(eta[j])}",
                   abs(int(s_assoc[j]) - int(eta[j])))

    info = gathered_information(eta, scenario.sensing_positions(), p.raw_data_bits, p.correlation_extent_m)
    if info < scenario.required_info * (1 - _REL_TOL):
        report.add("information", f"gathered {info:.6g} bits < required {scenario.required_info:.6g}",
                   scenario.required_info - info)

    m_assoc = mu[n_c + n_s:].sum(axis=1)
    for j in np.flatnonzero(m_assoc != 1):
        report.add("mec_association", f"MEC user {n_c + n_s + j} has {m_assoc[j]} associations",
                   abs(int(m_assoc[j]) - 1))

    for k in sorted(deployed):
        alloc = solution.power.get(k)
        if alloc is not None:
            content_k = set(np.flatnonzero(mu[:n_c, k]).tolist())
            vals = np.array([v for i, v in alloc.per_user_w.items() if i in content_k])
            total = float(vals.sum()) if len(vals) else 0.0
            if np.any(vals < 0):
                report.add("power_budget", f"UAV {k} has negative power", float(-vals.min()))
            if total > p.uav_max_tx_power_w * (1 + _REL_TOL):
                report.add("power_budget", f"UAV {k} transmits {total:.6g} W > {p.uav_max_tx_power_w} W",
                           total - p.uav_max_tx_power_w)
        calloc = solution.compute.get(k)
        if calloc is not None:
            mec_k = set(np.flatnonzero(mu[n_c + n_s:, k]).tolist())
            vals = np.array([v for i, v in calloc.per_user_hz.items() if i - n_c - n_s in mec_k])
            total = float(vals.sum()) if len(vals) else 0.0
            if np.any(vals < 0):
                report.add("compute_budget", f"UAV {k} has negative CPU speed", float(-vals.min()))
            if total > p.uav_compute_hz * (1 + _REL_TOL):
                report.add("compute_budget", f"UAV {k} computes {total:.6g} Hz > {p.uav_compute_hz} Hz",
                           total - p.uav_compute_hz)
        pos = solution.placements.get(k)
        if pos is None:
            report.add("altitude", f"deployed UAV {k} has no placement")
            continue
        z = float(pos[2])
        slack = 1e-9 * p.altitude_max_m
        if z < p.altitude_min_m - slack or z > p.altitude_max_m + slack:
            report.add("altitude", f"UAV {k} at altitude {z:.6g} m outside [{p.altitude_min_m}, {p.altitude_max_m}]",
                       max(p.altitude_min_m - z, z - p.altitude_max_m))
    return report


# -- assembly ----------------------------------------------------------------------

def split_users(scenario: Scenario, users: np.ndarray, activation) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(content, active sensing, MEC) subsets of ``users``."""
    n_c, n_s = scenario.n_content, scenario.n_sensing
    content = users[users < n_c]
    sensing = users[(users >= n_c) & (users < n_c + n_s)]
    sensing = sensing[np.asarray(activation, dtype=bool)[sensing - n_c]]
    mec = users[users >= n_c + n_s]
    return content, sensing, mec


def serve_uav(scenario: Scenario, field, k: int, placement, content, sensing, mec, allocate: bool = True):
    """Resources and energy of one UAV serving the given users at ``placement``.

    With ``allocate`` the power split runs first (taking MEC latency at an equal
    CPU split), then the CPU split against the resulting download times.
    Otherwise both budgets are split equally.
    """
    p = scenario.params
    placement = np.asarray(placement, dtype=float)
    uplink = np.concatenate([sensing, mec]).astype(int)
    G_c = cross_gains(field.gains(k, placement, content)) if len(content) else np.zeros((0, 0))
    G_u = cross_gains(field.gains(k, placement, uplink)) if len(uplink) else np.zeros((0, 0))
    R_u = uplink_rates(G_u, p) if len(uplink) else np.zeros(0)
    n_s, n_m = len(sensing), len(mec)
    R_s, R_m = R_u[:n_s], R_u[n_s:]
    uploads = p.raw_data_bits / R_s
    D = scenario.demand_bits()[content]
    if allocate:
        f_eq = p.uav_compute_hz / max(n_m, 1)
        latency = p.task_bits / R_m + p.task_bits * p.cycles_per_bit / f_eq
        power = allocate_power(PowerContext(np.asarray(content, dtype=int), G_c, D, compute_e2(uploads, latency, p)), p)
        P = power.powers
        downloads = D / rate(p.dl_bandwidth_hz, sinr(G_c, P, p.noise_power_w)) if len(content) else np.zeros(0)
        e1 = compute_e1(downloads, uploads, p)
        compute = allocate_compute(ComputeContext.build(mec, R_m, p, e1), p)
        f = compute.speeds
    else:
        P = np.full(len(content), p.uav_max_tx_power_w / max(len(content), 1))
        f = np.full(n_m, p.uav_compute_hz / max(n_m, 1))
        power = PowerAllocation(dict(zip(np.asarray(content).tolist(), P.tolist())), rho_star=float("nan"), powers=P)
        compute = ComputeAllocation(dict(zip(np.asarray(mec).tolist(), f.tolist())), lambda_star=float("nan"), speeds=f)
    load = load_from_cross(scenario, k, placement, content, G_c, sensing, mec, G_u, P, f, uplink=R_u)
    return power, compute, uav_energy(load, p)


def assemble_solution(scenario: Scenario, field, association, activation, placements: dict,
                      deployed=None, allocate: bool = True, solver: str = "") -> SliceSolution:
    """Run the per-UAV allocators for a fixed association/placement and price the result."""
    mu = np.asarray(association, dtype=bool)
    eta = np.asarray(activation, dtype=bool)
    if deployed is None:
        deployed = tuple(int(k) for k in np.flatnonzero(mu.any(axis=0)))
    power, compute, per = {}, {}, {}
    for k in deployed:
        content, sensing, mec = split_users(scenario, np.flatnonzero(mu[:, k]), eta)
        power[k], compute[k], per[k] = serve_uav(scenario, field, k, placements[k], content, sensing, mec, allocate)
    breakdown = EnergyBreakdown(per, float(sum(e.total_j for e in per.values())))
    return SliceSolution(tuple(deployed), {k: np.asarray(placements[k], dtype=float) for k in deployed},
                         mu, eta, power, compute, breakdown.total_j, breakdown, solver)
