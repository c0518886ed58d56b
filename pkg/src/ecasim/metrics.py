"""Run metrics: accumulation, Jain fairness, seed aggregation, CSV/JSON output.

Throughput counts delivered MAC payload bits only (goodput). Delay is
measured from MAC-queue arrival to the end of the successful exchange
(frame + SIFS + BlockACK), the figure compared against codec deadlines.
Jain's index is emitted per AC over the per-station goodputs of that AC
(fairness among peers) and once over whole-station goodputs.

The CSV contract is versioned; see CSV_COLUMNS and the README schema table.
Aggregate rows carry mean and sample standard deviation across seeds for
every numeric column.
"""

from __future__ import annotations

import csv
import json
import os
import statistics
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from .config import AC

if TYPE_CHECKING:
    from .engine import Simulation

__all__ = [
    "SCHEMA_VERSION", "CSV_COLUMNS", "AcMetrics", "RunMetrics",
    "jain", "collect_run_metrics", "aggregate",
    "write_runs_csv", "write_runs_json", "write_summary_csv", "write_summary_json",
]

SCHEMA_VERSION = "metrics-v1"

# Presentation order for per-AC columns: priority first.
_AC_ORDER = (AC.VO, AC.VI, AC.BE, AC.BK)


def jain(xs: Sequence[float]) -> float | None:
    """Jain's fairness index (sum x)^2 / (n * sum x^2); None when undefined."""
    if not xs:
        raise ValueError("jain index needs a non-empty sample")
    if any(x < 0 for x in xs):
        raise ValueError("jain index needs non-negative values")
    total = sum(xs)
    squares = sum(x * x for x in xs)
    if squares == 0:
        return None
    return total * total / (len(xs) * squares)


@dataclass(frozen=True)
class AcMetrics:
    ac: str
    throughput_bps: float
    delivered_packets: int
    tx_attempts: int
    successes: int
    collisions: int
    queue_drops: int
    retry_drops: int
    arrivals: int
    residual_queue: int
    mean_delay_us: float | None
    p95_delay_us: float | None
    mean_inter_success_us: float | None
    jain_stations: float | None


@dataclass(frozen=True)
class RunMetrics:
    schema: str
    protocol: str
    profile: str
    n_stations: int
    seed: int
    duration_s: float
    throughput_bps: float
    jain_overall: float | None
    tx_attempts: int
    collisions: int
    idle_slots: int
    success_slots: int
    collision_slots: int
    busy_time_us: int
    queue_drops: int
    retry_drops: int
    per_ac: tuple[AcMetrics, ...]  # ordered VO, VI, BE, BK
    # per-station goodputs (bps), outer index station, inner AC table order
    station_goodputs: tuple[tuple[float, ...], ...]


def _p95(samples: list[int]) -> float:
    ordered = sorted(samples)
    rank = -(-len(ordered) * 95 // 100)  # ceil(0.95 n), 1-based
    return float(ordered[rank - 1])


def collect_run_metrics(sim: "Simulation") -> RunMetrics:
    duration_s = sim.scenario.duration_us / 1_000_000
    per_ac: list[AcMetrics] = []
    for ac in _AC_ORDER:
        idx = int(ac)
        states = [sta.acs[idx] for sta in sim.stations]
        bits = sum(st.delivered_bits for st in states)
        delays: list[int] = []
        for st in states:
            delays.extend(st.delays_us)
        gap_sum = sum(st.gap_sum_us for st in states)
        gap_count = sum(st.gap_count for st in states)
        goodputs = [st.delivered_bits / duration_s for st in states]
        per_ac.append(AcMetrics(
            ac=ac.name,
            throughput_bps=bits / duration_s,
            delivered_packets=sum(st.delivered_packets for st in states),
            tx_attempts=sum(st.tx_attempts for st in states),
            successes=sum(st.successes for st in states),
            collisions=sum(st.collisions for st in states),
            queue_drops=sum(st.queue_drops for st in states),
            retry_drops=sum(st.retry_drops for st in states),
            arrivals=sum(st.arrivals for st in states),
            residual_queue=sum(len(st.queue) for st in states),
            mean_delay_us=(sum(delays) / len(delays)) if delays else None,
            p95_delay_us=_p95(delays) if delays else None,
            mean_inter_success_us=(gap_sum / gap_count) if gap_count else None,
            jain_stations=jain(goodputs) if any(goodputs) else None,
        ))

    station_goodputs = tuple(
        tuple(st.delivered_bits / duration_s for st in sta.acs)
        for sta in sim.stations
    )
    station_totals = [sum(row) for row in station_goodputs]
    return RunMetrics(
        schema=SCHEMA_VERSION,
        protocol=sim.protocol.value,
        profile=sim.scenario.profile.value,
        n_stations=sim.scenario.n_stations,
        seed=sim.seed,
        duration_s=duration_s,
        throughput_bps=sum(m.throughput_bps for m in per_ac),
        jain_overall=jain(station_totals) if any(station_totals) else None,
        tx_attempts=sum(m.tx_attempts for m in per_ac),
        collisions=sum(m.collisions for m in per_ac),
        idle_slots=sim.idle_slots,
        success_slots=sim.success_slots,
        collision_slots=sim.collision_slots,
        busy_time_us=sim.busy_time_us,
        queue_drops=sum(m.queue_drops for m in per_ac),
        retry_drops=sum(m.retry_drops for m in per_ac),
        per_ac=tuple(per_ac),
        station_goodputs=station_goodputs,
    )


_RUN_FIELDS = [
    "schema", "protocol", "profile", "n_stations", "seed", "duration_s",
    "throughput_bps", "jain_overall", "tx_attempts", "collisions",
    "idle_slots", "success_slots", "collision_slots", "busy_time_us",
    "queue_drops", "retry_drops",
]
_AC_FIELDS = [
    "throughput_bps", "delivered_packets", "tx_attempts", "successes",
    "collisions", "queue_drops", "retry_drops", "mean_delay_us",
    "p95_delay_us", "mean_inter_success_us", "jain_stations",
]

CSV_COLUMNS: list[str] = _RUN_FIELDS + [
    f"{field}_{ac.name}" for ac in _AC_ORDER for field in _AC_FIELDS
]

_KEY_COLUMNS = {"schema", "protocol", "profile", "n_stations", "seed", "duration_s"}


def run_to_row(m: RunMetrics) -> dict[str, object]:
    row: dict[str, object] = {name: getattr(m, name) for name in _RUN_FIELDS}
    for acm in m.per_ac:
        for field in _AC_FIELDS:
            row[f"{field}_{acm.ac}"] = getattr(acm, field)
    return row


def aggregate(runs: Sequence[RunMetrics]) -> dict[str, object]:
    """Mean/std across the seeds of one (protocol, profile, n_stations) cell."""
    if not runs:
        raise ValueError("cannot aggregate an empty run list")
    key = (runs[0].protocol, runs[0].profile, runs[0].n_stations)
    for m in runs[1:]:
        if (m.protocol, m.profile, m.n_stations) != key:
            raise ValueError(f"mixed sweep points in aggregate: {key} vs "
                             f"{(m.protocol, m.profile, m.n_stations)}")
    rows = [run_to_row(m) for m in runs]
    out: dict[str, object] = {
        "schema": SCHEMA_VERSION,
        "protocol": runs[0].protocol,
        "profile": runs[0].profile,
        "n_stations": runs[0].n_stations,
        "duration_s": runs[0].duration_s,
        "n_seeds": len(runs),
    }
    for col in CSV_COLUMNS:
        if col in _KEY_COLUMNS:
            continue
        values = [row[col] for row in rows if row[col] is not None]
        if not values:
            out[f"{col}_mean"] = None
            out[f"{col}_std"] = None
            continue
        out[f"{col}_mean"] = statistics.fmean(values)
        out[f"{col}_std"] = statistics.stdev(values) if len(values) > 1 else 0.0
    return out


SUMMARY_COLUMNS: list[str] = (
    ["schema", "protocol", "profile", "n_stations", "duration_s", "n_seeds"]
    + [f"{col}_{stat}" for col in CSV_COLUMNS if col not in _KEY_COLUMNS
       for stat in ("mean", "std")]
)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _csv_text(columns: list[str], rows: Iterable[dict[str, object]]) -> str:
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    return buf.getvalue()


def write_runs_csv(path: str, runs: Sequence[RunMetrics]) -> None:
    _atomic_write(path, _csv_text(CSV_COLUMNS, (run_to_row(m) for m in runs)))


def write_summary_csv(path: str, summaries: Sequence[dict[str, object]]) -> None:
    _atomic_write(path, _csv_text(SUMMARY_COLUMNS, summaries))


def write_runs_json(path: str, runs: Sequence[RunMetrics]) -> None:
    payload = []
    for m in runs:
        entry = run_to_row(m)
        entry["station_goodputs_bps"] = [list(row) for row in m.station_goodputs]
        payload.append(entry)
    _atomic_write(path, json.dumps({"schema": SCHEMA_VERSION, "runs": payload}, indent=1))


def write_summary_json(path: str, summaries: Sequence[dict[str, object]]) -> None:
    _atomic_write(path, json.dumps({"schema": SCHEMA_VERSION, "aggregates": list(summaries)},
                                   indent=1))
