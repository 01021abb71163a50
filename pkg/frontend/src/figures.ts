/**
 * Figure specifications and rendering.
 *
 * A FigureSpec names the input CSVs, the columns to draw (with optional
 * error-band columns), line styles and the output path.  Rendering is
 * read-only over the inputs and fully deterministic; nothing is written
 * unless every referenced file and column resolves.
 */

import { mkdirSync, writeFileSync } from "fs";
import { dirname } from "path";

import { column, loadResultCsv, ResultTable } from "./csv.js";
import { ChartSpec, CurveData, renderChart } from "./svg.js";

export interface CurveSpec {
  /** path of the result CSV this curve reads from */
  csv: string;
  /** value column */
  y: string;
  /** optional standard-error column drawn as a shaded band */
  se?: string;
  label: string;
  style?: "solid" | "dashed" | "dashdot";
  color?: string;
}

export interface FigureSpec {
  out: string;
  title: string;
  x_label?: string;
  y_label: string;
  /** horizontal guide at zero (used on witness panels) */
  zero_line?: boolean;
  curves: CurveSpec[];
}

const PALETTE = ["#1f6feb", "#d1242f", "#1a7f37", "#9a6700", "#8250df", "#bf3989"];

export function validateFigureSpec(spec: unknown): FigureSpec {
  const f = spec as FigureSpec;
  if (!f || typeof f !== "object") throw new Error("figure spec must be an object");
  if (typeof f.out !== "string" || !f.out) throw new Error("figure spec needs an 'out' path");
  if (!Array.isArray(f.curves) || f.curves.length === 0) {
    throw new Error(`figure spec '${f.out}' needs a non-empty 'curves' list`);
  }
  for (const c of f.curves) {
    if (typeof c.csv !== "string" || typeof c.y !== "string") {
      throw new Error(`figure spec '${f.out}': every curve needs 'csv' and 'y'`);
    }
    if (c.style && !["solid", "dashed", "dashdot"].includes(c.style)) {
      throw new Error(`figure spec '${f.out}': unknown style '${c.style}'`);
    }
  }
  return f;
}

/** Build the chart without touching the output file (errors surface first). */
export function buildChart(spec: FigureSpec, tables: Map<string, ResultTable>): ChartSpec {
  const curves: CurveData[] = spec.curves.map((c, i) => {
    const table = tables.get(c.csv)!;
    return {
      x: column(table, "t"),
      y: column(table, c.y),
      band: c.se ? column(table, c.se) : undefined,
      label: c.label ?? c.y,
      style: c.style ?? "solid",
      color: c.color ?? PALETTE[i % PALETTE.length],
    };
  });
  return {
    title: spec.title ?? "",
    xLabel: spec.x_label ?? "t",
    yLabel: spec.y_label ?? "",
    zeroLine: spec.zero_line ?? false,
    curves,
  };
}

export function render(spec: FigureSpec): string {
  const checked = validateFigureSpec(spec);
  const tables = new Map<string, ResultTable>();
  for (const c of checked.curves) {
    if (!tables.has(c.csv)) tables.set(c.csv, loadResultCsv(c.csv));
  }
  const svg = renderChart(buildChart(checked, tables));
  mkdirSync(dirname(checked.out) || ".", { recursive: true });
  writeFileSync(checked.out, svg);
  return checked.out;
}
