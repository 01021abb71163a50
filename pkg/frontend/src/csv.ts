/**
 * Reader for the simulation result CSV.
 *
 * The schema is fixed by the engine: a header row naming every column and
 * one row per sample time.  All columns except `source` are floats.  Errors
 * always name the offending file and column so a broken pipeline fails
 * loudly instead of plotting garbage.
 */

import { readFileSync } from "fs";

export const RESULT_COLUMNS = [
  "t",
  "n1", "n1_se", "n2", "n2_se", "n3", "n3_se",
  "vn1", "vn2", "vn3",
  "vn13", "vn13_se",
  "xi13", "xi13_se",
  "xis1", "xis1_se",
  "xis3", "xis3_se",
  "imag_residual",
  "source",
] as const;

export class CsvError extends Error {}

export interface ResultTable {
  path: string;
  columns: Map<string, number[]>;
  source: string[];
  rows: number;
}

export function parseResultCsv(text: string, path: string): ResultTable {
  const lines = text.split(/\r?\n/).filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) {
    throw new CsvError(`${path}: empty result file`);
  }
  const header = lines[0].split(",");
  if (lines.length === 1) {
    throw new CsvError(`${path}: no data rows`);
  }
  const columns = new Map<string, number[]>();
  const source: string[] = [];
  const numeric = header.filter((h) => h !== "source");
  for (const name of numeric) columns.set(name, []);

  for (let i = 1; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== header.length) {
      throw new CsvError(`${path}: row ${i + 1} has ${parts.length} fields, expected ${header.length}`);
    }
    for (let k = 0; k < header.length; k++) {
      if (header[k] === "source") {
        source.push(parts[k]);
        continue;
      }
      const v = Number(parts[k]);
      if (!Number.isFinite(v)) {
        throw new CsvError(`${path}: row ${i + 1}, column '${header[k]}' is not a finite number`);
      }
      columns.get(header[k])!.push(v);
    }
  }
  return { path, columns, source, rows: lines.length - 1 };
}

export function loadResultCsv(path: string): ResultTable {
  return parseResultCsv(readFileSync(path, "utf-8"), path);
}

/** Fetch a column, failing with the column and file name when absent. */
export function column(table: ResultTable, name: string): number[] {
  const col = table.columns.get(name);
  if (col === undefined) {
    throw new CsvError(`${table.path}: missing required column '${name}'`);
  }
  return col;
}
