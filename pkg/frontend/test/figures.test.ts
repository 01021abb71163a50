import { execFileSync } from "child_process";
import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { CsvError, RESULT_COLUMNS, loadResultCsv, parseResultCsv } from "../src/csv.js";
import { render } from "../src/figures.js";
import {
  populationsFigure,
  pulsedWitnessFigure,
  standardFigures,
  variancesFigure,
  witnessByNonlinearityFigure,
} from "../src/presets.js";

function syntheticCsv(rows = 40, phase = 0): string {
  const header = RESULT_COLUMNS.join(",");
  const lines = [header];
  for (let i = 0; i < rows; i++) {
    const t = i * 0.05;
    const n2 = 200 * Math.cos(Math.SQRT2 * t + phase) ** 2;
    const n1 = (200 - n2) / 2;
    const xi = 50 * Math.sin(Math.SQRT2 * t + phase) ** 4 - 5 * t;
    const vals = new Map<string, number | string>([
      ["t", t],
      ["n1", n1], ["n1_se", 0.1], ["n2", n2], ["n2_se", 0.12], ["n3", n1], ["n3_se", 0.1],
      ["vn1", n1 * 0.9], ["vn2", n2 * 0.8], ["vn3", n1 * 0.9],
      ["vn13", n1 * 1.8], ["vn13_se", 0.4],
      ["xi13", xi], ["xi13_se", 0.5],
      ["xis1", xi - n1 / 2], ["xis1_se", 0.5],
      ["xis3", xi - n1 / 2], ["xis3_se", 0.5],
      ["imag_residual", 1e-12],
      ["source", "positive_p"],
    ]);
    lines.push(RESULT_COLUMNS.map((c) => String(vals.get(c))).join(","));
  }
  return lines.join("\n") + "\n";
}

function writeData(dir: string): void {
  for (const [name, phase] of [
    ["fig1.csv", 0], ["fig2.csv", 0],
    ["fig3a.csv", 0], ["fig3b.csv", 0.1], ["fig3c.csv", 0.2],
    ["fig4a.csv", 0], ["fig4b.csv", 0.3],
  ] as const) {
    writeFileSync(join(dir, name), syntheticCsv(40, phase));
  }
}

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "triwell-figs-"));
}

const countCurves = (svg: string) => (svg.match(/class="curve"/g) ?? []).length;
const countBands = (svg: string) => (svg.match(/class="band"/g) ?? []).length;
const hasZeroGuide = (svg: string) => svg.includes('class="zero-guide"');

describe("csv reader", () => {
  it("parses every schema column", () => {
    const table = parseResultCsv(syntheticCsv(5), "mem.csv");
    expect(table.rows).toBe(5);
    expect(table.columns.get("xi13")).toHaveLength(5);
    expect(table.source[0]).toBe("positive_p");
  });

  it("rejects empty files", () => {
    expect(() => parseResultCsv("", "empty.csv")).toThrow(CsvError);
    expect(() => parseResultCsv("", "empty.csv")).toThrow(/empty/);
  });

  it("rejects header-only files", () => {
    expect(() => parseResultCsv(RESULT_COLUMNS.join(",") + "\n", "h.csv")).toThrow(/no data rows/);
  });

  it("rejects ragged rows", () => {
    const bad = RESULT_COLUMNS.join(",") + "\n1,2,3\n";
    expect(() => parseResultCsv(bad, "r.csv")).toThrow(/row 2/);
  });

  it("rejects non-numeric fields", () => {
    const text = syntheticCsv(2).replace("200", "abc");
    expect(() => parseResultCsv(text, "n.csv")).toThrow(/not a finite number/);
  });
});

describe("standard figures", () => {
  it("renders all four preset panels with the right curve counts", () => {
    const dir = tempDir();
    writeData(dir);
    const specs = standardFigures(dir, join(dir, "figs"));
    expect(specs).toHaveLength(4);
    const outs = specs.map((s) => render(s));
    const svg = outs.map((p) => readFileSync(p, "utf-8"));
    expect(countCurves(svg[0])).toBe(3); // populations
    expect(countCurves(svg[1])).toBe(3); // variances
    expect(countCurves(svg[2])).toBe(3); // witness per nonlinearity
    expect(countCurves(svg[3])).toBe(2); // pulsed comparison
  });

  it("draws the zero guide only on witness panels", () => {
    const dir = tempDir();
    writeData(dir);
    const [pop, vars, wit, pulse] = standardFigures(dir, join(dir, "figs")).map((s) =>
      readFileSync(render(s), "utf-8"),
    );
    expect(hasZeroGuide(pop)).toBe(false);
    expect(hasZeroGuide(vars)).toBe(false);
    expect(hasZeroGuide(wit)).toBe(true);
    expect(hasZeroGuide(pulse)).toBe(true);
  });

  it("shades error bands only where an error column is wired", () => {
    const dir = tempDir();
    writeData(dir);
    const pop = readFileSync(render(populationsFigure(join(dir, "fig1.csv"), join(dir, "p.svg"))), "utf-8");
    const vars = readFileSync(render(variancesFigure(join(dir, "fig2.csv"), join(dir, "v.svg"))), "utf-8");
    expect(countBands(pop)).toBe(3);
    expect(countBands(vars)).toBe(1); // only the well-difference variance carries one
  });

  it("is deterministic", () => {
    const dir = tempDir();
    writeData(dir);
    const spec = pulsedWitnessFigure(join(dir, "fig4a.csv"), join(dir, "fig4b.csv"), join(dir, "d.svg"));
    const a = readFileSync(render(spec), "utf-8");
    const b = readFileSync(render(spec), "utf-8");
    expect(a).toBe(b);
  });
});

describe("failure modes", () => {
  it("a deleted column fails with its name and writes nothing", () => {
    const dir = tempDir();
    const lines = syntheticCsv(10).trimEnd().split("\n");
    const idx = RESULT_COLUMNS.indexOf("xi13");
    const strip = (ln: string) => ln.split(",").filter((_, k) => k !== idx).join(",");
    writeFileSync(join(dir, "partial.csv"), lines.map(strip).join("\n") + "\n");
    const out = join(dir, "x.svg");
    const spec = witnessByNonlinearityFigure(
      join(dir, "partial.csv"), join(dir, "partial.csv"), join(dir, "partial.csv"), out,
    );
    expect(() => render(spec)).toThrow(/missing required column 'xi13'/);
    expect(existsSync(out)).toBe(false);
  });

  it("an empty csv fails and writes nothing", () => {
    const dir = tempDir();
    writeFileSync(join(dir, "empty.csv"), "");
    const out = join(dir, "e.svg");
    expect(() => render(populationsFigure(join(dir, "empty.csv"), out))).toThrow(/empty/);
    expect(existsSync(out)).toBe(false);
  });

  it("rejects malformed specs", () => {
    expect(() => render({ out: "", title: "", y_label: "", curves: [] } as never)).toThrow();
    expect(() =>
      render({ out: "x.svg", title: "", y_label: "", curves: [{ csv: "a.csv", y: "n1", label: "", style: "wavy" }] } as never),
    ).toThrow(/unknown style/);
  });
});

describe("cli", () => {
  it("renders from a spec file after build", () => {
    const here = new URL(".", import.meta.url).pathname;
    const dist = join(here, "..", "dist", "cli.js");
    if (!existsSync(dist)) return; // compiled output not present in pure-vitest runs
    const dir = tempDir();
    writeData(dir);
    const specPath = join(dir, "spec.json");
    writeFileSync(specPath, JSON.stringify(populationsFigure(join(dir, "fig1.csv"), join(dir, "cli.svg"))));
    execFileSync("node", [dist, "--spec", specPath]);
    expect(existsSync(join(dir, "cli.svg"))).toBe(true);
  });
});
