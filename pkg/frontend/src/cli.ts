#!/usr/bin/env node
/**
 * plot: render a collapse-sweep CSV to a figure.
 *
 * Usage:
 *   plot --in sweep.csv --out fig.svg [--series both|internal|photocurrent]
 *
 * PNG output is selected by the file extension (--out fig.png) and is
 * rasterized from the same SVG.  Schema-mismatch input exits nonzero.
 */

import { readFileSync, writeFileSync } from "fs";
import { pathToFileURL } from "url";

import { parseSweepCsv, SchemaError } from "./schema.js";
import { renderSweep, SeriesChoice } from "./render.js";

interface Args {
  input: string;
  output: string;
  series: SeriesChoice;
  title?: string;
}

export function parseArgs(argv: string[]): Args {
  let input = "";
  let output = "";
  let series: SeriesChoice = "both";
  let title: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) throw new Error(`missing value for ${a}`);
      return argv[++i];
    };
    if (a === "--in") input = next();
    else if (a === "--out") output = next();
    else if (a === "--series") {
      const v = next();
      if (v !== "both" && v !== "internal" && v !== "photocurrent") {
        throw new Error(`--series must be both|internal|photocurrent, got ${v}`);
      }
      series = v;
    } else if (a === "--title") title = next();
    else if (a === "--help" || a === "-h") {
      console.log(
        "usage: plot --in sweep.csv --out fig.svg|fig.png " +
          "[--series both|internal|photocurrent] [--title text]"
      );
      process.exit(0);
    } else throw new Error(`unknown argument ${a}`);
  }
  if (!input || !output) throw new Error("--in and --out are required");
  return { input, output, series, title };
}

export async function main(argv: string[]): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }

  let rows;
  try {
    rows = parseSweepCsv(readFileSync(args.input, "utf-8"));
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }

  const svg = renderSweep({ rows, series: args.series, title: args.title });

  if (args.output.toLowerCase().endsWith(".png")) {
    const { Resvg } = await import("@resvg/resvg-js");
    const png = new Resvg(svg).render().asPng();
    writeFileSync(args.output, png);
  } else {
    writeFileSync(args.output, svg);
  }
  console.log(`wrote ${args.output} (${rows.length} points)`);
  return 0;
}

const isDirect =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(process.argv[1]).href;
if (isDirect) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
