#!/usr/bin/env node
/** `figures <spec-file> [...]` — render each JSON figure spec to its SVG. */

import { readFileSync, realpathSync } from "node:fs";
import { fileURLToPath } from "node:url";

import { parseFigureSpec, renderFigure } from "./figure.js";

export function main(argv: string[]): number {
  if (argv.length === 0 || argv.includes("--help") || argv.includes("-h")) {
    process.stderr.write(
      "usage: figures <spec.json> [more-specs...]\n" +
      "  spec keys: inputs (CSV paths), x, seriesBy, output,\n" +
      "             y?, bound?, boundY?, title?, xLabel?, yLabel?\n",
    );
    return argv.length === 0 ? 1 : 0;
  }
  for (const path of argv) {
    const spec = parseFigureSpec(readFileSync(path, "utf-8"), path);
    const out = renderFigure(spec);
    process.stdout.write(`wrote ${out}\n`);
  }
  return 0;
}

// invoked as a script (bin entry or `node dist/cli.js`); realpath resolves
// the package-manager bin symlink back to this file
function invokedDirectly(): boolean {
  const entry = process.argv[1];
  if (entry === undefined) return false;
  try {
    return realpathSync(entry) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n`);
    process.exit(1);
  }
}
