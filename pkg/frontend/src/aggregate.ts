/**
 * Seed aggregation: collapse per-run rows into mean +/- std series over the
 * station-count axis, one series per protocol (and per AC on the bottom
 * panels).
 */

import { AcName, RunRow } from "./schema.js";

export interface Stat {
  mean: number;
  std: number;
}

export type SeriesPoints = Map<number, Stat>; // station count -> stat

function stat(values: number[]): Stat {
  const mean = values.reduce((a, b) => a + b, 0) / values.length;
  if (values.length < 2) return { mean, std: 0 };
  const ss = values.reduce((a, b) => a + (b - mean) * (b - mean), 0);
  return { mean, std: Math.sqrt(ss / (values.length - 1)) };
}

export function profilesIn(rows: RunRow[]): string[] {
  return [...new Set(rows.map((r) => r.profile))].sort();
}

export function protocolsIn(rows: RunRow[]): string[] {
  return [...new Set(rows.map((r) => r.protocol))].sort();
}

export function stationCountsIn(rows: RunRow[]): number[] {
  return [...new Set(rows.map((r) => r.n_stations))].sort((a, b) => a - b);
}

export function aggregateMetric(
  rows: RunRow[],
  protocol: string,
  value: (row: RunRow) => number | null,
): SeriesPoints {
  const byCount = new Map<number, number[]>();
  for (const row of rows) {
    if (row.protocol !== protocol) continue;
    const v = value(row);
    if (v === null) continue;
    const bucket = byCount.get(row.n_stations);
    if (bucket) bucket.push(v);
    else byCount.set(row.n_stations, [v]);
  }
  const out: SeriesPoints = new Map();
  for (const [n, values] of [...byCount.entries()].sort((a, b) => a[0] - b[0])) {
    out.set(n, stat(values));
  }
  return out;
}

export function acMetric(
  ac: AcName,
  field: "throughput_bps" | "mean_delay_us" | "mean_inter_success_us",
): (row: RunRow) => number | null {
  return (row) => row.perAc[ac][field];
}
