import csv
import json
import math

import numpy as np
import pytest

from uavslice.baselines import ExhaustiveLimits
from uavslice.cli import main
from uavslice.harness import (SweepSpec, TrialResult, aggregate, aggregate_path, read_results, run_sweep, run_trial,
                              trial_seed, write_results)
from uavslice.scenario import ConfigError, SystemParams, generate_scenario

SMALL = (2, 2, 2, 2, 3)
FAST = SystemParams(restarts=2)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("altitude", [1.0])
    with pytest.raises(ConfigError):
        SweepSpec("content_size", [], trials=1)
    with pytest.raises(ConfigError):
        SweepSpec("content_size", [1e8], solvers=("greedy",))


def test_setting_maps_parameters():
    spec = SweepSpec("user_count", [9])
    params, counts, _ = spec.setting(10, FAST)
    assert counts.n_users == 10 and (counts.n_content, counts.n_sensing, counts.n_mec) == (4, 3, 3)
    params, _, _ = SweepSpec("pathloss_exp", [2.6]).setting(2.6, FAST)
    assert params.pathloss_exp == 2.6
    _, counts, _ = SweepSpec("uav_count", [3]).setting(3, FAST)
    assert counts.n_uavs == 3
    _, _, k = SweepSpec("deployed_k", [2], solvers=("kmeans",)).setting(2, FAST)
    assert k == 2


def test_trial_seeds():
    assert trial_seed(0, 1) == trial_seed(0, 1)
    assert trial_seed(0, 1) != trial_seed(0, 2)
    assert trial_seed(0, 1, 0) != trial_seed(0, 1, 1)


def test_cardinality_and_order():
    spec = SweepSpec("content_size", [1e8, 2e8, 4e8], trials=2, solvers=("heuristic", "random"), counts=SMALL)
    res = run_sweep(spec, FAST)
    assert len(res) == 12
    assert [(r.value, r.trial, r.solver) for r in res[:4]] == [
        (1e8, 0, "heuristic"), (1e8, 0, "random"), (1e8, 1, "heuristic"), (1e8, 1, "random")]
    # paired instances: same seed at every sweep value
    assert len({r.seed for r in res if r.trial == 0}) == 1
    unpaired = run_sweep(SweepSpec("content_size", [1e8, 2e8], trials=1, counts=SMALL, paired=False), FAST)
    assert unpaired[0].seed != unpaired[1].seed


def test_workers_match_serial():
    spec = SweepSpec("storage_fraction", [0.5, 1.0], trials=2, counts=SMALL)
    a = run_sweep(spec, FAST)
    b = run_sweep(spec, FAST, workers=2)
    assert [(r.objective_j, r.seed) for r in a] == [(r.objective_j, r.seed) for r in b]


def test_exhaustive_refusal_is_recorded():
    sc = generate_scenario(FAST, (9, 9, 9, 5, 4), 1)
    r = run_trial(sc, "exhaustive", 27, 0, ExhaustiveLimits())
    assert not r.feasible and math.isnan(r.objective_j) and "LimitExceeded" in r.error


def test_aggregate_recomputes_from_raw(tmp_path):
    spec = SweepSpec("content_size", [1e8, 3e8], trials=3, solvers=("heuristic", "random"), counts=SMALL)
    res = run_sweep(spec, FAST)
    raw, agg = write_results(res, tmp_path / "out.csv")
    assert agg == aggregate_path(raw) == tmp_path / "out_aggregate.csv"
    back = read_results(raw)
    assert [r.objective_j for r in back] == [r.objective_j for r in res]
    rows = list(csv.DictReader(open(agg)))
    assert len(rows) == 4
    for row in rows:
        vals = np.array([r.objective_j for r in back if r.value == float(row["value"])
                         and r.solver == row["solver"] and r.feasible])
        assert float(row["mean_objective_j"]) == pytest.approx(vals.mean(), rel=1e-12)
        assert float(row["std_objective_j"]) == pytest.approx(vals.std(ddof=1), rel=1e-12)


def test_aggregate_all_infeasible():
    rows = [TrialResult(1.0, "kmeans", t, 0, math.nan, 0, 0, False, 0.0, "x") for t in range(3)]
    [a] = aggregate(rows)
    assert a.n == 3 and a.n_feasible == 0 and math.isnan(a.mean_objective_j)


def test_empty_results_header_only(tmp_path):
    raw, agg = write_results([], tmp_path / "e.csv")
    assert len(open(raw).read().splitlines()) == 1
    assert len(open(agg).read().splitlines()) == 1


def test_cli_deterministic_output(tmp_path):
    args = ["run", "--sweep", "content_size=1e8,2e8", "--trials", "2", "--solvers", "heuristic,random",
            "--deterministic"]
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("restarts = 2\nn_content = 2\nn_sensing = 2\nn_mec = 2\nn_uavs = 2\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--config", str(cfg), "--out", str(a)]) == 0
    assert main(args + ["--config", str(cfg), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert aggregate_path(a).read_bytes() == aggregate_path(b).read_bytes()
    assert "wall_s" not in a.read_text().splitlines()[0]


def test_cli_exit_codes(tmp_path):
    out = str(tmp_path / "x.csv")
    assert main(["run", "--sweep", "altitude=1,2", "--out", out]) == 2
    assert main(["run", "--sweep", "content_size=abc", "--out", out]) == 2
    assert main(["run", "--sweep", "content_size=1e8", "--config", str(tmp_path / "missing.txt"), "--out", out]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("uav_speed_mps = -3\n")
    assert main(["run", "--sweep", "content_size=1e8", "--config", str(bad), "--out", out]) == 2
    # exhaustive on the default 27-user instance is refused and reported as infeasible
    assert main(["run", "--sweep", "content_size=1e8", "--solvers", "exhaustive", "--trials", "1",
                 "--out", out]) == 1


def test_cli_demo_and_validate(tmp_path, capsys):
    sol = tmp_path / "demo.json"
    assert main(["demo", "--out", str(sol)]) == 0
    scen = sol.with_suffix(".scenario.json")
    assert main(["validate", "--solution", str(sol), "--scenario", str(scen)]) == 0
    assert "feasible" in capsys.readouterr().out
    doc = json.loads(sol.read_text())
    doc["association"] = [[0] * len(r) for r in doc["association"]]
    sol.write_text(json.dumps(doc))
    assert main(["validate", "--solution", str(sol), "--scenario", str(scen)]) == 1
