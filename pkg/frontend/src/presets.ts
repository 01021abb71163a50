/**
 * The four standard figure layouts over preset result files: well
 * populations, number variances, the end-well witness for three
 * nonlinearity strengths, and the pulsed-coupling witness comparison.
 */

import { FigureSpec } from "./figures.js";

export function populationsFigure(csv: string, out: string): FigureSpec {
  return {
    out,
    title: "Well populations",
    y_label: "atoms",
    curves: [
      { csv, y: "n1", se: "n1_se", label: "well 1", style: "solid" },
      { csv, y: "n2", se: "n2_se", label: "well 2", style: "dashed" },
      { csv, y: "n3", se: "n3_se", label: "well 3", style: "dashdot" },
    ],
  };
}

export function variancesFigure(csv: string, out: string): FigureSpec {
  return {
    out,
    title: "Number variances",
    y_label: "variance",
    curves: [
      { csv, y: "vn1", label: "V(N1)", style: "solid" },
      { csv, y: "vn2", label: "V(N2)", style: "dashed" },
      { csv, y: "vn13", se: "vn13_se", label: "V(N1-N3)", style: "dashdot" },
    ],
  };
}

export function witnessByNonlinearityFigure(
  csvStrong: string, csvMid: string, csvWeak: string, out: string,
): FigureSpec {
  return {
    out,
    title: "End-well entanglement witness",
    y_label: "xi13",
    zero_line: true,
    curves: [
      { csv: csvStrong, y: "xi13", se: "xi13_se", label: "chi = 1e-3", style: "solid" },
      { csv: csvMid, y: "xi13", se: "xi13_se", label: "chi = 1e-4", style: "dashed" },
      { csv: csvWeak, y: "xi13", se: "xi13_se", label: "chi = 1e-5", style: "dashdot" },
    ],
  };
}

export function pulsedWitnessFigure(csvBothCut: string, csvJCut: string, out: string): FigureSpec {
  return {
    out,
    title: "Witness with pulsed couplings",
    y_label: "xi13",
    zero_line: true,
    curves: [
      { csv: csvBothCut, y: "xi13", se: "xi13_se", label: "tunnelling and collisions cut", style: "solid" },
      { csv: csvJCut, y: "xi13", se: "xi13_se", label: "tunnelling cut only", style: "dashdot" },
    ],
  };
}

/** All four figures, assuming preset CSV names inside dataDir. */
export function standardFigures(dataDir: string, outDir: string): FigureSpec[] {
  const d = (n: string) => `${dataDir}/${n}`;
  const o = (n: string) => `${outDir}/${n}`;
  return [
    populationsFigure(d("fig1.csv"), o("fig1.svg")),
    variancesFigure(d("fig2.csv"), o("fig2.svg")),
    witnessByNonlinearityFigure(d("fig3a.csv"), d("fig3b.csv"), d("fig3c.csv"), o("fig3.svg")),
    pulsedWitnessFigure(d("fig4a.csv"), d("fig4b.csv"), o("fig4.svg")),
  ];
}
