/**
 * Render six-panel result figures from a simulator runs.csv.
 *
 *   node dist/cli.js --input results/runs.csv --output results/ [--profile saturated]
 *
 * Emits figure-<profile>.svg per traffic profile present (or the one
 * selected). Exits 1 on schema mismatches, naming the offending column.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { profilesIn } from "./aggregate.js";
import { buildFigure } from "./figure.js";
import { renderSvg } from "./render.js";
import { SchemaError, parseRunsCsv } from "./schema.js";

export interface CliArgs {
  input: string;
  output: string;
  profile?: string;
  width: number;
  height: number;
}

export function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = { input: "", output: ".", width: 1500, height: 760 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`${flag} needs a value`);
      return argv[i];
    };
    switch (flag) {
      case "--input":
      case "-i":
        args.input = next();
        break;
      case "--output":
      case "-o":
        args.output = next();
        break;
      case "--profile":
        args.profile = next();
        break;
      case "--width":
        args.width = Number(next());
        break;
      case "--height":
        args.height = Number(next());
        break;
      case "--help":
      case "-h":
        throw new Error(
          "usage: cli --input runs.csv --output dir [--profile saturated|unsaturated]",
        );
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!args.input) throw new Error("--input runs.csv is required");
  return args;
}

export function main(argv: string[], log = console.error): number {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
  } catch (err) {
    log(`error: ${(err as Error).message}`);
    return 1;
  }
  let text: string;
  try {
    text = fs.readFileSync(args.input, "utf8");
  } catch (err) {
    log(`error: cannot read ${args.input}: ${(err as Error).message}`);
    return 1;
  }
  try {
    const rows = parseRunsCsv(text);
    const profiles = args.profile ? [args.profile] : profilesIn(rows);
    fs.mkdirSync(args.output, { recursive: true });
    for (const profile of profiles) {
      const svg = renderSvg(buildFigure(rows, profile), args.width, args.height);
      const file = path.join(args.output, `figure-${profile}.svg`);
      fs.writeFileSync(file, svg);
      log(`wrote ${file}`);
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      log(`schema error: ${err.message}`);
      return 1;
    }
    log(`error: ${(err as Error).message}`);
    return 1;
  }
}
