import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { REQUIRED_COLUMNS, SchemaError, parseRunsCsv } from "../src/schema.js";

const fixture = fs.readFileSync(
  path.join(__dirname, "fixtures", "runs.csv"),
  "utf8",
);

describe("runs.csv parsing", () => {
  it("parses the simulator's real output", () => {
    const rows = parseRunsCsv(fixture);
    expect(rows.length).toBe(16); // 2 protocols x 2 counts x 2 seeds x 2 profiles
    const protocols = new Set(rows.map((r) => r.protocol));
    expect(protocols).toEqual(new Set(["eca", "eca-dr"]));
    expect(new Set(rows.map((r) => r.profile))).toEqual(
      new Set(["saturated", "unsaturated"]),
    );
    for (const row of rows) {
      expect(row.throughput_bps).toBeGreaterThan(0);
      expect(row.perAc.VO.throughput_bps).toBeGreaterThanOrEqual(0);
      expect(row.n_stations === 5 || row.n_stations === 10).toBe(true);
    }
  });

  it("names the first missing column", () => {
    const lines = fixture.trim().split("\n");
    const drop = lines[0].split(",").indexOf("jain_overall");
    const broken = lines
      .map((line) => line.split(",").filter((_, i) => i !== drop).join(","))
      .join("\n");
    try {
      parseRunsCsv(broken);
      expect.unreachable("should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(SchemaError);
      expect((err as SchemaError).column).toBe("jain_overall");
      expect((err as Error).message).toContain("jain_overall");
    }
  });

  it("rejects unknown schema versions", () => {
    const bumped = fixture.replaceAll("metrics-v1", "metrics-v9");
    expect(() => parseRunsCsv(bumped)).toThrow(/schema/);
  });

  it("treats empty cells as missing values", () => {
    const rows = parseRunsCsv(fixture);
    // BK is saturated here, so delays exist; fabricate an empty cell instead
    const lines = fixture.split("\n");
    const header = lines[0].split(",");
    const idx = header.indexOf("mean_delay_us_VO");
    const cells = lines[1].split(",");
    cells[idx] = "";
    const doctored = [lines[0], cells.join(","), ...lines.slice(2)].join("\n");
    const parsed = parseRunsCsv(doctored);
    expect(parsed[0].perAc.VO.mean_delay_us).toBeNull();
    expect(rows[0].perAc.VO.mean_delay_us).not.toBeNull();
  });

  it("covers every column the figure consumes", () => {
    for (const column of REQUIRED_COLUMNS) {
      expect(fixture.split("\n")[0].split(",")).toContain(column);
    }
  });
});
