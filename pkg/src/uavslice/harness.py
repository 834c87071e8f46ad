"""Monte Carlo sweeps over scenario parameters, with CSV output for plotting."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .baselines import ExhaustiveLimits, exhaustive_search, kmeans_solution, random_solution
from .channel import ChannelField
from .scenario import DEFAULT_COUNTS, ConfigError, Counts, Scenario, SystemParams, generate_scenario, split_roles
from .slicer import solve
from .solution import validate_solution

SOLVERS = ("heuristic", "random", "exhaustive", "kmeans")

# sweep parameter -> SystemParams field it sets (None: handled specially)
SWEEP_PARAMETERS = {
    "content_size": "content_size_bits",
    "correlation_extent": "correlation_extent_m",
    "compute_speed": "uav_compute_hz",
    "storage_fraction": "storage_fraction",
    "required_info": "required_info_fraction",
    "pathloss_exp": "pathloss_exp",
    "user_count": None,
    "uav_count": None,
    "deployed_k": None,
}


@dataclass
class SweepSpec:
    parameter: str
    values: tuple
    trials: int = 100
    solvers: tuple = ("heuristic",)
    seed: int = 0
    counts: Counts = DEFAULT_COUNTS
    limits: ExhaustiveLimits = ExhaustiveLimits()
    kmeans_k: int | None = None
    paired: bool = True     # same instance seeds at every sweep value

    def __post_init__(self):
        self.values = tuple(self.values)
        self.solvers = tuple(self.solvers)
        self.counts = Counts(*self.counts)
        errors = []
        if self.parameter not in SWEEP_PARAMETERS:
            errors.append(f"unknown sweep parameter {self.parameter!r}; expected one of {sorted(SWEEP_PARAMETERS)}")
        if not self.values:
            errors.append("sweep needs at least one value")
        if self.trials < 1:
            errors.append("trials must be >= 1")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad or not self.solvers:
            errors.append(f"unknown solvers {bad}; expected a subset of {SOLVERS}")
        if errors:
            raise ConfigError("; ".join(errors))

    def setting(self, value, base: SystemParams) -> tuple[SystemParams, Counts, int | None]:
        """Parameters, counts and K for one sweep value."""
        counts, k = self.counts, self.kmeans_k
        target = SWEEP_PARAMETERS[self.parameter]
        if target is not None:
            return base.replace(**{target: value}), counts, k
        if self.parameter == "user_count":
            n_c, n_s, n_m = split_roles(int(value))
            return base, counts._replace(n_content=n_c, n_sensing=n_s, n_mec=n_m), k
        if self.parameter == "uav_count":
            return base, counts._replace(n_uavs=int(value)), k
        return base, counts, int(value)


@dataclass
class TrialResult:
    value: float
    solver: str
    trial: int
    seed: int
    objective_j: float
    deployed: int
    active_sensing: int
    feasible: bool
    wall_s: float
    error: str = ""

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def trial_seed(seed: int, trial: int, value_index: int | None = None) -> int:
    """Instance seed for one trial; ``value_index`` decorrelates sweep values."""
    key = [int(seed) & 0xFFFFFFFF, int(trial)] if value_index is None else \
        [int(seed) & 0xFFFFFFFF, int(value_index), int(trial)]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def run_solver(scenario: Scenario, solver: str, field: ChannelField | None = None,
               limits: ExhaustiveLimits = ExhaustiveLimits(), kmeans_k: int | None = None):
    field = ChannelField.for_scenario(scenario) if field is None else field
    if solver == "heuristic":
        return solve(scenario, field)
    if solver == "random":
        return random_solution(scenario, field)
    if solver == "exhaustive":
        return exhaustive_search(scenario, field, limits)
    if solver == "kmeans":
        return kmeans_solution(scenario, field, kmeans_k)
    raise ConfigError(f"unknown solver {solver!r}")


def run_trial(scenario: Scenario, solver: str, value: float = float("nan"), trial: int = 0,
              limits: ExhaustiveLimits = ExhaustiveLimits(), kmeans_k: int | None = None) -> TrialResult:
    """Solve one instance on its own channel draw; solver failures become infeasible records."""
    start = time.perf_counter()
    try:
        sol = run_solver(scenario, solver, ChannelField.for_scenario(scenario), limits, kmeans_k)
        report = validate_solution(sol, scenario)
        return TrialResult(value, solver, trial, scenario.seed, sol.objective_j, sol.n_deployed, sol.n_active,
                           report.ok, time.perf_counter() - start, "" if report.ok else str(report))
    except (ValueError, RuntimeError) as exc:
        return TrialResult(value, solver, trial, scenario.seed, float("nan"), 0, 0, False,
                           time.perf_counter() - start, f"{type(exc).__name__}: {exc}")


def _run_cell(args) -> list[TrialResult]:
    spec, base, index, value, trial = args
    params, counts, k = spec.setting(value, base)
    seed = trial_seed(spec.seed, trial, None if spec.paired else index)
    try:
        scenario = generate_scenario(params, counts, seed)
    except ValueError as exc:
        return [TrialResult(value, s, trial, seed, float("nan"), 0, 0, False, 0.0, f"{type(exc).__name__}: {exc}")
                for s in spec.solvers]
    return [run_trial(scenario, s, value, trial, spec.limits, k) for s in spec.solvers]


def run_sweep(spec: SweepSpec, base: SystemParams | None = None, workers: int = 1) -> list[TrialResult]:
    """Every value x trial x solver, in that nesting order regardless of ``workers``."""
    base = SystemParams() if base is None else base
    cells = [(spec, base, i, v, t) for i, v in enumerate(spec.values) for t in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = [_run_cell(c) for c in cells]
    return [r for chunk in chunks for r in chunk]


@dataclass
class Aggregate:
    value: float
    solver: str
    n: int
    n_feasible: int
    mean_objective_j: float
    std_objective_j: float
    sem_objective_j: float
    mean_deployed: float
    mean_active_sensing: float


def aggregate(results) -> list[Aggregate]:
    """Mean/stddev of feasible objectives per (value, solver), in first-seen order."""
    groups: dict = {}
    for r in results:
        groups.setdefault((r.value, r.solver), []).append(r)
    out = []
    for (value, solver), rows in groups.items():
        ok = [r for r in rows if r.feasible]
        obj = np.array([r.objective_j for r in ok])
        n = len(ok)
        std = float(obj.std(ddof=1)) if n > 1 else 0.0
        out.append(Aggregate(value, solver, len(rows), n,
                             float(obj.mean()) if n else math.nan, std, std / math.sqrt(n) if n else math.nan,
                             float(np.mean([r.deployed for r in ok])) if n else math.nan,
                             float(np.mean([r.active_sensing for r in ok])) if n else math.nan))
    return out


def aggregate_path(path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_aggregate{path.suffix or '.csv'}")


def write_results(results, path, deterministic: bool = False) -> tuple[Path, Path]:
    """Raw rows to ``path`` and per-(value, solver) statistics next to it."""
    path = Path(path)
    cols = TrialResult.columns()
    if deterministic:
        cols.remove("wall_s")
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in results:
                w.writerow([_fmt(getattr(r, c)) for c in cols])
        agg = aggregate_path(path)
        with open(agg, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f.name for f in fields(Aggregate)])
            for a in aggregate(results):
                w.writerow([_fmt(getattr(a, f.name)) for f in fields(Aggregate)])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path, agg


def read_results(path) -> list[TrialResult]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialResult(float(row["value"]), row["solver"], int(row["trial"]), int(row["seed"]),
                                   float(row["objective_j"]), int(row["deployed"]), int(row["active_sensing"]),
                                   row["feasible"] == "1", float(row.get("wall_s") or 0.0), row["error"]))
    return out


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


# -- worked example ------------------------------------------------------------

DEMO_DEMAND = np.array([[0, 0, 1, 0],
                        [0, 0, 0, 1],
                        [1, 0, 0, 0],
                        [0, 0, 0, 1],
                        [0, 1, 0, 0]], dtype=bool)
DEMO_STORAGE = np.array([[1, 1, 1],
                         [0, 1, 0],
                         [1, 1, 0],
                         [1, 0, 1]], dtype=bool)


def demo_scenario(seed: int = 44, params: SystemParams | None = None) -> Scenario:
    """Five content users, one sensing and one MEC user, three UAVs, fixed demand and storage."""
    params = SystemParams() if params is None else params
    base = generate_scenario(params, (5, 1, 1, 3, 4), seed)
    return replace(base, demand=DEMO_DEMAND, storage=DEMO_STORAGE)
