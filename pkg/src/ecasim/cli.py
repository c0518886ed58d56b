"""Command-line runner: scenario loading, sweeps over (protocol, stations, seed),
metric files, and plan description.

Exit codes: 0 success, 1 validation problem, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import os
import sys
from dataclasses import dataclass

from . import metrics as metrics_mod
from .config import Protocol, ScenarioConfig, ScenarioError, load_scenario, serialize_scenario
from .engine import run as run_one

__all__ = ["SweepPlan", "build_plan", "run_sweep", "describe", "main"]


@dataclass(frozen=True)
class SweepPlan:
    scenario: ScenarioConfig
    protocols: tuple[Protocol, ...]
    station_counts: tuple[int, ...]
    seeds: tuple[int, ...]
    output_dir: str

    def cells(self) -> list[tuple[Protocol, int, int]]:
        """Every (protocol, n_stations, seed) run exactly once, in output order."""
        return [(p, n, s) for p in self.protocols for n in self.station_counts
                for s in self.seeds]

    def digest(self) -> str:
        canon = serialize_scenario(self.scenario) + repr(
            ([p.value for p in self.protocols], self.station_counts, self.seeds))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def build_plan(args: argparse.Namespace) -> SweepPlan:
    scenario = load_scenario(args.scenario)
    if args.duration is not None:
        scenario = dataclasses.replace(scenario, duration_us=round(args.duration * 1_000_000))
    if args.quick:
        scenario = dataclasses.replace(scenario, duration_us=5_000_000)

    if args.protocols:
        try:
            protocols = tuple(Protocol(p.strip()) for p in args.protocols.split(","))
        except ValueError as exc:
            raise ScenarioError(f"--protocols: {exc}") from None
    else:
        protocols = scenario.sweep_protocols

    try:
        if args.stations:
            counts = tuple(int(n) for n in args.stations.split(","))
        elif args.quick:
            counts = (10, 30, 50)
        else:
            counts = scenario.sweep_stations

        if args.seeds:
            seeds = tuple(int(s) for s in args.seeds.split(","))
        elif args.quick:
            seeds = scenario.seeds[:3] if len(scenario.seeds) >= 3 else scenario.seeds
        else:
            seeds = scenario.seeds
    except ValueError as exc:
        raise ScenarioError(f"bad --stations/--seeds value: {exc}") from None

    if not seeds:
        raise ScenarioError("the run plan needs at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ScenarioError("run plan seeds must be distinct")
    if any(n < 1 for n in counts):
        raise ScenarioError("station counts must be >= 1")

    return SweepPlan(scenario=scenario, protocols=protocols, station_counts=counts,
                     seeds=seeds, output_dir=args.output or ".")


def describe(plan: SweepPlan) -> str:
    cells = plan.cells()
    sim_seconds = len(cells) * plan.scenario.duration_us / 1_000_000
    # crude single-core wall-time guess: saturated desk-scale runs cost
    # roughly 0.3 s per simulated second per 10 stations
    est_wall = sum(0.03 * n * plan.scenario.duration_us / 1_000_000
                   for _, n, _ in cells)
    lines = [
        f"scenario:  {plan.scenario.name} ({plan.scenario.profile.value}, "
        f"{plan.scenario.duration_us / 1_000_000:g} s per run)",
        f"protocols: {', '.join(p.value for p in plan.protocols)}",
        f"stations:  {', '.join(str(n) for n in plan.station_counts)}",
        f"seeds:     {', '.join(str(s) for s in plan.seeds)}",
        f"runs:      {len(cells)} ({sim_seconds:g} simulated seconds,"
        f" ~{est_wall:.0f} s wall estimate)",
        f"digest:    {plan.digest()}",
    ]
    return "\n".join(lines)


def _run_cell(payload: tuple[ScenarioConfig, Protocol, int, int, int, str]) -> metrics_mod.RunMetrics:
    scenario, protocol, n, seed, trace_level, outdir = payload
    cfg = scenario.for_run(protocol, n)
    if trace_level > 0:
        path = os.path.join(outdir, f"trace-{protocol.value}-n{n}-s{seed}.log")
        with open(path, "w", encoding="utf-8") as fh:
            return run_one(cfg, seed, trace=lambda line: fh.write(line + "\n"),
                           trace_level=trace_level)
    return run_one(cfg, seed)


def run_sweep(plan: SweepPlan, workers: int = 1, trace_level: int = 0,
              log=print) -> int:
    probe = os.path.join(plan.output_dir, ".write-probe")
    try:
        os.makedirs(plan.output_dir, exist_ok=True)
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise ScenarioError(f"output directory not writable: {exc}") from None

    cells = plan.cells()
    jobs = [(plan.scenario, p, n, s, trace_level, plan.output_dir) for p, n, s in cells]
    results: list[metrics_mod.RunMetrics]
    if workers > 1:
        import multiprocessing

        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_run_cell, jobs)
    else:
        results = []
        for i, job in enumerate(jobs):
            results.append(_run_cell(job))
            log(f"[{i + 1}/{len(jobs)}] {job[1].value} n={job[2]} seed={job[3]} done")

    # normalise ordering so parallel and serial sweeps write identical files
    results.sort(key=lambda m: (m.protocol, m.n_stations, m.seed))

    summaries = []
    by_cell: dict[tuple[str, str, int], list[metrics_mod.RunMetrics]] = {}
    for m in results:
        by_cell.setdefault((m.protocol, m.profile, m.n_stations), []).append(m)
    for group in by_cell.values():
        summaries.append(metrics_mod.aggregate(group))

    out = plan.output_dir
    metrics_mod.write_runs_csv(os.path.join(out, "runs.csv"), results)
    metrics_mod.write_runs_json(os.path.join(out, "runs.json"), results)
    metrics_mod.write_summary_csv(os.path.join(out, "summary.csv"), summaries)
    metrics_mod.write_summary_json(os.path.join(out, "summary.json"), summaries)
    log(f"wrote {len(results)} run rows and {len(summaries)} aggregate rows to {out}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scenario", help="scenario file (YAML; see README schema)")
    parser.add_argument("-o", "--output", help="output directory for metric files")
    parser.add_argument("--protocols", help="comma list: csma-ca,eca,eca-dr (overrides sweep block)")
    parser.add_argument("--stations", help="comma list of station counts (overrides sweep block)")
    parser.add_argument("--seeds", help="comma list of seeds (overrides scenario seeds)")
    parser.add_argument("--duration", type=float, help="simulated seconds per run (override)")
    parser.add_argument("--quick", action="store_true",
                        help="smoke preset: 5 s runs, 3 seeds, stations 10,30,50")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ecasim",
                                     description="Dense-WLAN MAC simulator (CSMA/CA, ECA, ECA-DR)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the sweep and write metric files")
    _add_common(p_run)
    p_run.add_argument("--workers", type=int, default=1, help="parallel runs (default 1)")
    p_run.add_argument("--trace", type=int, default=0,
                       help="per-slot trace verbosity (0 off, 1 busy events, 2 everything)")

    p_desc = sub.add_parser("describe", help="print the run plan without simulating")
    _add_common(p_desc)

    args = parser.parse_args(argv)
    try:
        plan = build_plan(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "describe":
        print(describe(plan))
        return 0

    try:
        return run_sweep(plan, workers=args.workers, trace_level=args.trace)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - runtime failures exit 2 with diagnostics
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
