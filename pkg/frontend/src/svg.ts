/**
 * Minimal hand-rolled SVG line charts.
 *
 * No DOM, no plotting library: the output is a deterministic string, so the
 * renderer can run in any node process and tests can assert on the markup
 * (curve counts, guide lines, error bands) directly.
 */

export interface CurveData {
  x: number[];
  y: number[];
  /** half-width of the shaded band around the curve, if any */
  band?: number[];
  label: string;
  style: "solid" | "dashed" | "dashdot";
  color: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  zeroLine: boolean;
  curves: CurveData[];
}

const W = 720;
const H = 420;
const ML = 64;
const MR = 18;
const MT = 40;
const MB = 52;

const DASH: Record<CurveData["style"], string> = {
  solid: "",
  dashed: "8,5",
  dashdot: "10,4,2,4",
};

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 1e-9; v += step) ticks.push(v);
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Number(v.toPrecision(6)));
}

export function renderChart(spec: ChartSpec): string {
  if (spec.curves.length === 0) {
    throw new Error("chart needs at least one curve");
  }
  const pw = W - ML - MR;
  const ph = H - MT - MB;

  const xs = spec.curves.flatMap((c) => c.x);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const c of spec.curves) {
    for (let i = 0; i < c.y.length; i++) {
      const b = c.band ? Math.abs(c.band[i]) : 0;
      yMin = Math.min(yMin, c.y[i] - b);
      yMax = Math.max(yMax, c.y[i] + b);
    }
  }
  if (spec.zeroLine) {
    yMin = Math.min(yMin, 0);
    yMax = Math.max(yMax, 0);
  }
  const pad = 0.05 * (yMax - yMin || 1);
  yMin -= pad;
  yMax += pad;

  const xOf = (v: number) => ML + ((v - xMin) / (xMax - xMin || 1)) * pw;
  const yOf = (v: number) => MT + ph - ((v - yMin) / (yMax - yMin || 1)) * ph;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#fff"/>\n`;
  s += `<text x="${ML}" y="${MT - 16}" font-size="13" font-weight="600" fill="#222">${esc(spec.title)}</text>\n`;

  for (const v of niceTicks(yMin, yMax, 6)) {
    const y = yOf(v).toFixed(1);
    s += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#eee" stroke-width="0.6"/>\n`;
    s += `<text x="${ML - 6}" y="${Number(y) + 3.5}" text-anchor="end" font-size="10" fill="#555">${esc(fmt(v))}</text>\n`;
  }
  for (const v of niceTicks(xMin, xMax, 8)) {
    const x = xOf(v).toFixed(1);
    s += `<line x1="${x}" y1="${MT + ph}" x2="${x}" y2="${MT + ph + 4}" stroke="#333" stroke-width="0.6"/>\n`;
    s += `<text x="${x}" y="${MT + ph + 16}" text-anchor="middle" font-size="10" fill="#555">${esc(fmt(v))}</text>\n`;
  }

  if (spec.zeroLine) {
    const y = yOf(0).toFixed(1);
    s += `<line class="zero-guide" x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#444" stroke-width="0.8"/>\n`;
  }

  for (const c of spec.curves) {
    if (c.band) {
      const upper = c.x.map((x, i) => `${xOf(x).toFixed(1)},${yOf(c.y[i] + Math.abs(c.band![i])).toFixed(1)}`);
      const lower = c.x.map((x, i) => `${xOf(x).toFixed(1)},${yOf(c.y[i] - Math.abs(c.band![i])).toFixed(1)}`).reverse();
      s += `<polygon class="band" fill="${c.color}" opacity="0.15" points="${upper.join(" ")} ${lower.join(" ")}"/>\n`;
    }
  }
  for (const c of spec.curves) {
    const pts = c.x.map((x, i) => `${xOf(x).toFixed(1)},${yOf(c.y[i]).toFixed(1)}`).join(" ");
    const dash = DASH[c.style] ? ` stroke-dasharray="${DASH[c.style]}"` : "";
    s += `<polyline class="curve" fill="none" stroke="${c.color}" stroke-width="1.6"${dash} points="${pts}"/>\n`;
  }

  // axes and labels
  s += `<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + ph}" stroke="#333" stroke-width="1"/>\n`;
  s += `<line x1="${ML}" y1="${MT + ph}" x2="${ML + pw}" y2="${MT + ph}" stroke="#333" stroke-width="1"/>\n`;
  s += `<text x="${ML + pw / 2}" y="${H - 10}" text-anchor="middle" font-size="12" fill="#333">${esc(spec.xLabel)}</text>\n`;
  s += `<text x="16" y="${MT + ph / 2}" text-anchor="middle" font-size="12" fill="#333" transform="rotate(-90,16,${MT + ph / 2})">${esc(spec.yLabel)}</text>\n`;

  // legend
  let ly = MT + 10;
  for (const c of spec.curves) {
    const lx = ML + pw - 170;
    const dash = DASH[c.style] ? ` stroke-dasharray="${DASH[c.style]}"` : "";
    s += `<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${c.color}" stroke-width="1.6"${dash}/>\n`;
    s += `<text x="${lx + 32}" y="${ly + 3.5}" font-size="10.5" fill="#333">${esc(c.label)}</text>\n`;
    ly += 15;
  }

  s += "</svg>\n";
  return s;
}
