#!/usr/bin/env node
/**
 * Figure renderer CLI.
 *
 * Usage:
 *   node dist/cli.js --spec figure.json [--spec another.json ...]
 *   node dist/cli.js --standard DATA_DIR OUT_DIR
 *
 * A spec file holds one FigureSpec object or an array of them.  --standard
 * renders the four stock figures from preset result files in DATA_DIR.
 */

import { readFileSync } from "fs";

import { FigureSpec, render } from "./figures.js";
import { standardFigures } from "./presets.js";

function loadSpecs(path: string): FigureSpec[] {
  const parsed = JSON.parse(readFileSync(path, "utf-8"));
  return Array.isArray(parsed) ? parsed : [parsed];
}

function main(argv: string[]): number {
  const specs: FigureSpec[] = [];
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--spec") {
      const path = argv[++i];
      if (!path) {
        console.error("--spec needs a file path");
        return 2;
      }
      specs.push(...loadSpecs(path));
    } else if (argv[i] === "--standard") {
      const dataDir = argv[++i];
      const outDir = argv[++i];
      if (!dataDir || !outDir) {
        console.error("--standard needs DATA_DIR and OUT_DIR");
        return 2;
      }
      specs.push(...standardFigures(dataDir, outDir));
    } else {
      console.error(`unknown argument '${argv[i]}'`);
      return 2;
    }
  }
  if (specs.length === 0) {
    console.error("nothing to render: pass --spec FILE or --standard DATA_DIR OUT_DIR");
    return 2;
  }
  for (const spec of specs) {
    const out = render(spec);
    console.log(`wrote ${out}`);
  }
  return 0;
}

process.exit(main(process.argv.slice(2)));
