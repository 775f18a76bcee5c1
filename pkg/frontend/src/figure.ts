/** Deterministic SVG line charts for quantizer sweep results.
 *
 * The renderer consumes the harness CSV interfaces untouched: sweep rows
 * (one per operating point, y values already in dB) and, optionally, an
 * analytical-bound CSV drawn as a dashed overlay.  Output is a pure function
 * of the spec and the input files: fixed palette, fixed layout, fixed number
 * formatting, no clocks and no randomness, so re-rendering identical inputs
 * reproduces the file byte for byte.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { numericColumn, parseCsv, stringColumn, type Table } from "./csv.js";

export interface FigureSpec {
  /** Sweep CSV paths; rows from all inputs are pooled before grouping. */
  inputs: string[];
  /** Column used for the horizontal axis (must be numeric). */
  x: string;
  /** Column whose distinct values become the plotted series. */
  seriesBy: string;
  /** Value column, already in dB; defaults to "nmse_db". */
  y?: string;
  /** Optional bound CSV; drawn dashed when it has at least one row. */
  bound?: string;
  /** Value column in the bound CSV; defaults to "bound_nmse_db". */
  boundY?: string;
  /** Output SVG path. */
  output: string;
  title?: string;
  xLabel?: string;
  yLabel?: string;
}

const SPEC_KEYS = new Set([
  "inputs", "x", "seriesBy", "y", "bound", "boundY",
  "output", "title", "xLabel", "yLabel",
]);

/** Colorblind-safe fixed palette; series take colors by first appearance. */
const PALETTE = ["#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00"];
const BOUND_COLOR = "#444444";
const MAX_SERIES = 6; // series plus the bound overlay

interface Point {
  x: number;
  y: number;
}

interface Series {
  key: string;
  color: string;
  points: Point[]; // sorted by x
}

export function parseFigureSpec(text: string, path: string): FigureSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new Error(`${path}: not valid JSON: ${(e as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error(`${path}: figure spec must be a JSON object`);
  }
  const obj = raw as Record<string, unknown>;
  for (const key of Object.keys(obj)) {
    if (!SPEC_KEYS.has(key)) {
      throw new Error(`${path}: unknown figure spec key "${key}"`);
    }
  }
  const str = (key: string, required: boolean): string | undefined => {
    const v = obj[key];
    if (v === undefined) {
      if (required) throw new Error(`${path}: missing required key "${key}"`);
      return undefined;
    }
    if (typeof v !== "string" || v === "") {
      throw new Error(`${path}: key "${key}" must be a non-empty string`);
    }
    return v;
  };
  const inputs = obj["inputs"];
  if (!Array.isArray(inputs) || inputs.length === 0 ||
      !inputs.every((p) => typeof p === "string" && p !== "")) {
    throw new Error(`${path}: "inputs" must be a non-empty array of paths`);
  }
  return {
    inputs: inputs as string[],
    x: str("x", true)!,
    seriesBy: str("seriesBy", true)!,
    y: str("y", false),
    bound: str("bound", false),
    boundY: str("boundY", false),
    output: str("output", true)!,
    title: str("title", false),
    xLabel: str("xLabel", false),
    yLabel: str("yLabel", false),
  };
}

function gatherSeries(tables: Table[], spec: FigureSpec): Series[] {
  const order: string[] = [];
  const byKey = new Map<string, Point[]>();
  for (const table of tables) {
    const keys = stringColumn(table, spec.seriesBy);
    const xs = numericColumn(table, spec.x);
    const ys = numericColumn(table, spec.y ?? "nmse_db");
    for (let i = 0; i < keys.length; i++) {
      const key = keys[i]!;
      let points = byKey.get(key);
      if (points === undefined) {
        points = [];
        byKey.set(key, points);
        order.push(key);
      }
      points.push({ x: xs[i]!, y: ys[i]! });
    }
  }
  return order.map((key, i) => ({
    key,
    color: PALETTE[i % PALETTE.length]!,
    // stable sort: ties keep input order
    points: byKey.get(key)!
      .map((p, j) => ({ p, j }))
      .sort((a, b) => a.p.x - b.p.x || a.j - b.j)
      .map(({ p }) => p),
  }));
}

function gatherBound(spec: FigureSpec): Point[] {
  if (spec.bound === undefined) return [];
  const table = parseCsv(readFileSync(spec.bound, "utf-8"), spec.bound);
  if (table.rows.length === 0) return [];
  const xs = numericColumn(table, spec.x);
  const ys = numericColumn(table, spec.boundY ?? "bound_nmse_db");
  return xs
    .map((x, i) => ({ x, y: ys[i]!, j: i }))
    .sort((a, b) => a.x - b.x || a.j - b.j)
    .map(({ x, y }) => ({ x, y }));
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough)!;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 1e-9; v += step) {
    // snap to the grid so accumulated addition error never shows in labels
    ticks.push(Math.round(v / step) * step);
  }
  return ticks;
}

/** Fixed-point label with just enough decimals for the tick step. */
function fmtTick(v: number, step: number): string {
  const decimals = Math.max(0, -Math.floor(Math.log10(step) + 1e-9));
  const text = v.toFixed(Math.min(decimals, 6));
  return text === "-0" ? "0" : text;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderFigure(spec: FigureSpec): string {
  const tables = spec.inputs.map((p) => parseCsv(readFileSync(p, "utf-8"), p));
  const series = gatherSeries(tables, spec);
  const bound = gatherBound(spec);
  if (series.length === 0) {
    throw new Error("no data rows in any input CSV");
  }
  const nLines = series.length + (bound.length > 0 ? 1 : 0);
  if (nLines > MAX_SERIES) {
    throw new Error(
      `${nLines} lines requested, at most ${MAX_SERIES} are legible; ` +
      "split the figure",
    );
  }
  const svg = buildSvg(spec, series, bound);
  writeFileSync(spec.output, svg, "utf-8");
  return spec.output;
}

function buildSvg(spec: FigureSpec, series: Series[], bound: Point[]): string {
  const W = 720;
  const H = 440;
  const ml = 64;
  const mr = 24;
  const mt = spec.title ? 40 : 24;
  const mb = 56;
  const pw = W - ml - mr;
  const ph = H - mt - mb;

  const all = series.flatMap((s) => s.points).concat(bound);
  let xMin = Math.min(...all.map((p) => p.x));
  let xMax = Math.max(...all.map((p) => p.x));
  let yMin = Math.min(...all.map((p) => p.y));
  let yMax = Math.max(...all.map((p) => p.y));
  if (xMax - xMin === 0) {
    xMin -= 0.5;
    xMax += 0.5;
  }
  if (yMax - yMin === 0) {
    yMin -= 1;
    yMax += 1;
  } else {
    const pad = (yMax - yMin) * 0.06;
    yMin -= pad;
    yMax += pad;
  }
  const xOf = (v: number) => ml + ((v - xMin) / (xMax - xMin)) * pw;
  const yOf = (v: number) => mt + ph - ((v - yMin) / (yMax - yMin)) * ph;

  const xTicks = niceTicks(xMin, xMax, 6);
  const yTicks = niceTicks(yMin, yMax, 6);
  const xStep = xTicks.length > 1 ? xTicks[1]! - xTicks[0]! : 1;
  const yStep = yTicks.length > 1 ? yTicks[1]! - yTicks[0]! : 1;

  let s = `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" ` +
    `viewBox="0 0 ${W} ${H}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${W}" height="${H}" fill="#ffffff"/>\n`;
  if (spec.title) {
    s += `<text x="${ml}" y="22" font-size="14" font-weight="600" ` +
      `fill="#222222">${esc(spec.title)}</text>\n`;
  }

  for (const v of yTicks) {
    const y = yOf(v).toFixed(2);
    s += `<line x1="${ml}" y1="${y}" x2="${ml + pw}" y2="${y}" ` +
      `stroke="#e5e5e5" stroke-width="1"/>\n`;
    s += `<text x="${ml - 8}" y="${y}" font-size="11" fill="#555555" ` +
      `text-anchor="end" dominant-baseline="middle">${fmtTick(v, yStep)}</text>\n`;
  }
  for (const v of xTicks) {
    const x = xOf(v).toFixed(2);
    s += `<line x1="${x}" y1="${mt + ph}" x2="${x}" y2="${mt + ph + 5}" ` +
      `stroke="#555555" stroke-width="1"/>\n`;
    s += `<text x="${x}" y="${mt + ph + 18}" font-size="11" fill="#555555" ` +
      `text-anchor="middle">${fmtTick(v, xStep)}</text>\n`;
  }
  s += `<line x1="${ml}" y1="${mt}" x2="${ml}" y2="${mt + ph}" ` +
    `stroke="#222222" stroke-width="1"/>\n`;
  s += `<line x1="${ml}" y1="${mt + ph}" x2="${ml + pw}" y2="${mt + ph}" ` +
    `stroke="#222222" stroke-width="1"/>\n`;
  s += `<text x="${ml + pw / 2}" y="${H - 16}" font-size="12" fill="#222222" ` +
    `text-anchor="middle">${esc(spec.xLabel ?? spec.x)}</text>\n`;
  s += `<text x="18" y="${mt + ph / 2}" font-size="12" fill="#222222" ` +
    `text-anchor="middle" transform="rotate(-90 18 ${mt + ph / 2})">` +
    `${esc(spec.yLabel ?? "NMSE (dB)")}</text>\n`;

  const coords = (pts: Point[]) =>
    pts.map((p) => `${xOf(p.x).toFixed(2)},${yOf(p.y).toFixed(2)}`).join(" ");

  if (bound.length > 0) {
    s += `<polyline class="bound" points="${coords(bound)}" fill="none" ` +
      `stroke="${BOUND_COLOR}" stroke-width="1.5" stroke-dasharray="7,4"/>\n`;
  }
  for (const sr of series) {
    s += `<polyline class="series" data-key="${esc(sr.key)}" ` +
      `points="${coords(sr.points)}" fill="none" stroke="${sr.color}" ` +
      `stroke-width="1.8"/>\n`;
    for (const p of sr.points) {
      s += `<circle cx="${xOf(p.x).toFixed(2)}" cy="${yOf(p.y).toFixed(2)}" ` +
        `r="3" fill="${sr.color}"/>\n`;
    }
  }

  const entries: { label: string; color: string; dash?: string }[] =
    series.map((sr) => ({ label: sr.key, color: sr.color }));
  if (bound.length > 0) {
    entries.push({ label: "bound", color: BOUND_COLOR, dash: "7,4" });
  }
  const lw = 16;
  const lh = 16;
  const legendW = 8 + lw + 6 +
    Math.max(...entries.map((e) => e.label.length)) * 6.6 + 8;
  const lx = ml + pw - legendW - 6;
  const ly = mt + 6;
  s += `<rect x="${lx.toFixed(2)}" y="${ly}" width="${legendW.toFixed(2)}" ` +
    `height="${entries.length * lh + 10}" fill="#ffffff" fill-opacity="0.85" ` +
    `stroke="#cccccc" stroke-width="0.5"/>\n`;
  entries.forEach((e, i) => {
    const cy = ly + 13 + i * lh;
    const dash = e.dash ? ` stroke-dasharray="${e.dash}"` : "";
    s += `<line x1="${(lx + 8).toFixed(2)}" y1="${cy - 4}" ` +
      `x2="${(lx + 8 + lw).toFixed(2)}" y2="${cy - 4}" stroke="${e.color}" ` +
      `stroke-width="1.8"${dash}/>\n`;
    s += `<text x="${(lx + 8 + lw + 6).toFixed(2)}" y="${cy}" font-size="11" ` +
      `fill="#222222">${esc(e.label)}</text>\n`;
  });

  s += `</svg>\n`;
  return s;
}
