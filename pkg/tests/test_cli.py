import argparse
import csv
import json
import os

import pytest

from ecasim.cli import build_plan, main

QUICK_SCENARIO = """\
name: cli-test
profile: saturated
duration_s: 0.3
seeds: [1, 2]
stations: 2
sweep:
  protocols: [eca]
  stations: [2]
traffic:
  VO: off
  VI: off
  BE: {kind: cbr, rate_mbps: 65}
  BK: off
"""


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(QUICK_SCENARIO)
    return str(path)


def test_describe_prints_plan_without_side_effects(tmp_path, scenario_file, capsys):
    out = tmp_path / "results"
    rc = main(["describe", scenario_file, "-o", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "runs:      2" in text
    assert "digest:" in text
    assert not out.exists()


def test_describe_full_sweep_run_count(capsys):
    rc = main(["describe", "scenarios/saturated.yaml"])
    assert rc == 0
    assert "runs:      360" in capsys.readouterr().out  # 2 protocols x 18 counts x 10 seeds


def test_describe_digest_is_stable(scenario_file, capsys):
    main(["describe", scenario_file])
    first = capsys.readouterr().out
    main(["describe", scenario_file])
    second = capsys.readouterr().out
    assert first == second


def test_run_writes_metric_files(tmp_path, scenario_file):
    out = tmp_path / "results"
    rc = main(["run", scenario_file, "-o", str(out)])
    assert rc == 0
    with open(out / "runs.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert {r["seed"] for r in rows} == {"1", "2"}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["aggregates"][0]["n_seeds"] == 2
    assert (out / "runs.json").exists()
    assert (out / "summary.csv").exists()


def test_rerun_is_byte_identical(tmp_path, scenario_file):
    out = tmp_path / "results"
    main(["run", scenario_file, "-o", str(out)])
    first = (out / "runs.csv").read_bytes()
    main(["run", scenario_file, "-o", str(out)])
    assert (out / "runs.csv").read_bytes() == first


def test_seed_and_station_overrides(tmp_path, scenario_file):
    out = tmp_path / "results"
    rc = main(["run", scenario_file, "-o", str(out), "--seeds", "7", "--stations", "3"])
    assert rc == 0
    with open(out / "runs.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["seed"] == "7"
    assert rows[0]["n_stations"] == "3"


def test_invalid_protocol_override_is_validation_error(tmp_path, scenario_file, capsys):
    rc = main(["run", scenario_file, "-o", str(tmp_path / "x"), "--protocols", "dcf"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_unwritable_output_dir_fails_before_simulating(tmp_path, scenario_file, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    rc = main(["run", scenario_file, "-o", str(blocker / "sub")])
    assert rc == 1
    assert "not writable" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path, capsys):
    rc = main(["run", str(tmp_path / "nope.yaml"), "-o", str(tmp_path)])
    assert rc == 1


def test_bad_seed_override(tmp_path, scenario_file, capsys):
    rc = main(["run", scenario_file, "-o", str(tmp_path / "o"), "--seeds", "1,x"])
    assert rc == 1


def test_duration_override_shortens_runs(tmp_path, scenario_file):
    out = tmp_path / "results"
    rc = main(["run", scenario_file, "-o", str(out), "--duration", "0.1", "--seeds", "1"])
    assert rc == 0
    with open(out / "runs.csv") as fh:
        row = next(csv.DictReader(fh))
    assert float(row["duration_s"]) == 0.1


def test_trace_files_written(tmp_path, scenario_file):
    out = tmp_path / "results"
    rc = main(["run", scenario_file, "-o", str(out), "--seeds", "1", "--trace", "1"])
    assert rc == 0
    traces = [p for p in os.listdir(out) if p.startswith("trace-")]
    assert traces == ["trace-eca-n2-s1.log"]
    content = (out / traces[0]).read_text()
    assert "success sta=" in content


def test_quick_preset_plan(scenario_file):
    args = argparse.Namespace(scenario="scenarios/saturated.yaml", output=None,
                              protocols=None, stations=None, seeds=None,
                              duration=None, quick=True)
    plan = build_plan(args)
    assert plan.scenario.duration_us == 5_000_000
    assert plan.station_counts == (10, 30, 50)
    assert len(plan.seeds) == 3
    assert len(plan.cells()) == 2 * 3 * 3  # protocols x counts x seeds


def test_parallel_equals_serial(tmp_path, scenario_file):
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    main(["run", scenario_file, "-o", str(serial)])
    main(["run", scenario_file, "-o", str(parallel), "--workers", "2"])
    assert (serial / "runs.csv").read_bytes() == (parallel / "runs.csv").read_bytes()
