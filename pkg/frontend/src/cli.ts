/** Command line: render one figure from a sweep CSV into an SVG file.
 *
 * Usage:
 *   node dist/cli.js --input sweep.csv --figure decomposition \
 *     --output fig1.svg --rho 0.08
 */

import { readFileSync, writeFileSync } from "node:fs";
import process from "node:process";

import { renderDecomposition, renderRobustVsVanilla } from "./figures.js";

interface Options {
  input: string;
  figure: "decomposition" | "robust-vs-vanilla";
  output: string;
  rho: number;
}

function parseArgs(argv: string[]): Options {
  const options: Partial<Options> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (value === undefined) {
      throw new Error(`missing value for ${flag}`);
    }
    switch (flag) {
      case "--input":
        options.input = value;
        break;
      case "--output":
        options.output = value;
        break;
      case "--figure":
        if (value !== "decomposition" && value !== "robust-vs-vanilla") {
          throw new Error(
            `--figure must be 'decomposition' or 'robust-vs-vanilla', got '${value}'`,
          );
        }
        options.figure = value;
        break;
      case "--rho": {
        const rho = Number(value);
        if (!Number.isFinite(rho) || rho < 0) {
          throw new Error(`--rho must be a nonnegative number, got '${value}'`);
        }
        options.rho = rho;
        break;
      }
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  for (const key of ["input", "figure", "output", "rho"] as const) {
    if (options[key] === undefined) {
      throw new Error(`--${key} is required`);
    }
  }
  return options as Options;
}

export function main(argv: string[]): number {
  let options: Options;
  try {
    options = parseArgs(argv);
    const csvText = readFileSync(options.input, "utf8");
    const svg = options.figure === "decomposition"
      ? renderDecomposition(csvText, options.rho)
      : renderRobustVsVanilla(csvText, options.rho);
    writeFileSync(options.output, svg + "\n");
    console.log(`wrote ${options.output}`);
    return 0;
  } catch (error) {
    console.error(`error: ${error instanceof Error ? error.message : error}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
