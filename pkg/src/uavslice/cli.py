"""Command line: run sweeps, validate saved solutions, and solve the worked example."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .baselines import ExhaustiveLimits, exhaustive_search
from .channel import ChannelField
from .harness import SOLVERS, SWEEP_PARAMETERS, SweepSpec, aggregate, demo_scenario, run_sweep, write_results
from .scenario import ConfigError, Scenario, load_config
from .slicer import solve
from .solution import InfeasibleError, SliceSolution, validate_solution

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2


def _parse_sweep(text: str) -> tuple[str, list[float]]:
    name, sep, raw = text.partition("=")
    if not sep or name.strip() not in SWEEP_PARAMETERS:
        raise ConfigError(f"--sweep must be <param>=<v1,v2,...> with param in {sorted(SWEEP_PARAMETERS)}")
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"non-numeric sweep value in {raw!r}") from None
    return name.strip(), values


def cmd_run(args) -> int:
    text = Path(args.config).read_text() if args.config else ""
    params, counts = load_config(text)
    param, values = _parse_sweep(args.sweep)
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    trials = 1000 if args.full_trials else args.trials
    spec = SweepSpec(param, values, trials, solvers, args.seed, counts,
                     ExhaustiveLimits.parse(args.exhaustive_limits), args.kmeans_k, not args.unpaired)
    results = run_sweep(spec, params, workers=args.workers)
    raw, agg = write_results(results, args.out, deterministic=args.deterministic)
    for a in aggregate(results):
        print(f"{param}={a.value:g} {a.solver:<10} feasible {a.n_feasible}/{a.n} "
              f"mean {a.mean_objective_j:.6g} J (sem {a.sem_objective_j:.3g})")
    print(f"wrote {raw} and {agg}")
    return EXIT_OK if all(r.feasible for r in results) else EXIT_INFEASIBLE


def cmd_validate(args) -> int:
    scenario = Scenario.from_json(Path(args.scenario).read_text())
    solution = SliceSolution.from_json(Path(args.solution).read_text())
    report = validate_solution(solution, scenario)
    print(report)
    return EXIT_OK if report.ok else EXIT_INFEASIBLE


def cmd_demo(args) -> int:
    scenario = demo_scenario(args.seed)
    field = ChannelField.for_scenario(scenario)
    sol = solve(scenario, field)
    names = {0: "content", 1: "content", 2: "content", 3: "content", 4: "content", 5: "sensing", 6: "mec"}
    print(f"heuristic: {sol.objective_j:.6g} J with UAVs {[k + 1 for k in sol.deployed]}")
    for i, k in zip(*np.nonzero(sol.association)):
        print(f"  n{i + 1} ({names[int(i)]}) -> u{k + 1}")
    for k in sol.deployed:
        e = sol.breakdown.per_uav[k]
        x, y, z = sol.placements[k]
        print(f"  u{k + 1} at ({x:.1f}, {y:.1f}, {z:.1f}) m: move {e.movement_j:.1f} J, hover {e.hover_j:.1f} J, "
              f"compute {e.compute_j:.3g} J, transmit {e.transmit_j:.1f} J")
    if args.exhaustive:
        best = exhaustive_search(scenario, field)
        print(f"exhaustive: {best.objective_j:.6g} J over {best.meta['candidates']} candidates")
    if args.out:
        Path(args.out).write_text(sol.to_json())
        Path(args.out).with_suffix(".scenario.json").write_text(scenario.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavslice", description="Energy-aware multi-UAV network slicing")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Monte Carlo sweep over one parameter")
    run.add_argument("--config", help="key = value parameter file")
    run.add_argument("--sweep", required=True, help="<param>=<v1,v2,...>")
    run.add_argument("--solvers", default="heuristic", help=f"comma list from {','.join(SOLVERS)}")
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--full-trials", action="store_true", help="use 1000 trials per value")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="raw CSV path (aggregate written alongside)")
    run.add_argument("--exhaustive-limits", default="", help="e.g. N=7,U=3,Ns=3")
    run.add_argument("--kmeans-k", type=int, default=None, help="UAVs deployed by the kmeans solver")
    run.add_argument("--unpaired", action="store_true", help="fresh instances at every sweep value")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--deterministic", action="store_true", help="omit wall times for byte-identical output")
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a saved solution against its scenario")
    val.add_argument("--solution", required=True)
    val.add_argument("--scenario", required=True)
    val.set_defaults(func=cmd_validate)

    demo = sub.add_parser("demo", help="solve the five-content-user worked example")
    demo.add_argument("--seed", type=int, default=44)
    demo.add_argument("--exhaustive", action="store_true", help="also run exhaustive search")
    demo.add_argument("--out", help="write the solution JSON here (scenario alongside)")
    demo.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
