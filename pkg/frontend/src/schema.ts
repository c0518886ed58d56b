/**
 * Typed view of the simulator's runs.csv contract (schema metrics-v1).
 * Parsing refuses files that are missing any column the figures consume,
 * naming the first missing column, so silently absent data can't render
 * as an empty series.
 */

import Papa from "papaparse";

export const ACS = ["VO", "VI", "BE", "BK"] as const;
export type AcName = (typeof ACS)[number];

export const SCHEMA_VERSION = "metrics-v1";

const GLOBAL_COLUMNS = [
  "schema",
  "protocol",
  "profile",
  "n_stations",
  "seed",
  "throughput_bps",
  "collisions",
  "jain_overall",
] as const;

const PER_AC_COLUMNS = ["throughput_bps", "mean_delay_us", "mean_inter_success_us"] as const;

export const REQUIRED_COLUMNS: string[] = [
  ...GLOBAL_COLUMNS,
  ...ACS.flatMap((ac) => PER_AC_COLUMNS.map((c) => `${c}_${ac}`)),
];

export interface RunRow {
  protocol: string;
  profile: string;
  n_stations: number;
  seed: number;
  throughput_bps: number;
  collisions: number;
  jain_overall: number | null;
  perAc: Record<AcName, {
    throughput_bps: number;
    mean_delay_us: number | null;
    mean_inter_success_us: number | null;
  }>;
}

export class SchemaError extends Error {
  constructor(message: string, readonly column?: string) {
    super(message);
    this.name = "SchemaError";
  }
}

function num(raw: string | undefined, column: string, row: number): number {
  const v = Number(raw);
  if (raw === undefined || raw === "" || Number.isNaN(v)) {
    throw new SchemaError(`row ${row}: column ${column} is not numeric (${raw})`, column);
  }
  return v;
}

function numOrNull(raw: string | undefined, column: string, row: number): number | null {
  if (raw === undefined || raw === "") return null;
  return num(raw, column, row);
}

export function parseRunsCsv(text: string): RunRow[] {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`CSV parse error at row ${e.row}: ${e.message}`);
  }
  const header = parsed.meta.fields ?? [];
  for (const column of REQUIRED_COLUMNS) {
    if (!header.includes(column)) {
      throw new SchemaError(`missing required column: ${column}`, column);
    }
  }
  return parsed.data.map((raw, i) => {
    if (raw.schema !== SCHEMA_VERSION) {
      throw new SchemaError(
        `row ${i}: unsupported schema ${raw.schema} (expected ${SCHEMA_VERSION})`,
        "schema",
      );
    }
    const perAc = {} as RunRow["perAc"];
    for (const ac of ACS) {
      perAc[ac] = {
        throughput_bps: num(raw[`throughput_bps_${ac}`], `throughput_bps_${ac}`, i),
        mean_delay_us: numOrNull(raw[`mean_delay_us_${ac}`], `mean_delay_us_${ac}`, i),
        mean_inter_success_us: numOrNull(
          raw[`mean_inter_success_us_${ac}`],
          `mean_inter_success_us_${ac}`,
          i,
        ),
      };
    }
    return {
      protocol: raw.protocol,
      profile: raw.profile,
      n_stations: num(raw.n_stations, "n_stations", i),
      seed: num(raw.seed, "seed", i),
      throughput_bps: num(raw.throughput_bps, "throughput_bps", i),
      collisions: num(raw.collisions, "collisions", i),
      jain_overall: numOrNull(raw.jain_overall, "jain_overall", i),
      perAc,
    };
  });
}
