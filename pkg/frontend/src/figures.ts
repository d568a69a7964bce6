// Figure builders.
//
// Five figure kinds, each reading one of the CSV layouts the cusplab CLI
// emits.  A figure is described by a small JSON spec (kind, input CSVs,
// axis scales, output path, size) and rendered to a standalone SVG string.
// The builders only read the tables; no quantity is recomputed here.

import { resolve } from "node:path";
import { loadTable, numericColumn, rawColumn, requireColumns, logRadiusMagnitude, Table } from "./csv.js";
import {
  AxisScale,
  Frame,
  Scale,
  axes,
  esc,
  fmt,
  makeScale,
  polylinePath,
  rampColor,
  svgDocument,
} from "./svg.js";

export type FigureKind = "trajectory" | "collapse" | "snapshots" | "heatmap" | "bounds";

export interface FigureSpec {
  kind: FigureKind;
  /** One CSV path, or several to overlay (trajectory, collapse, bounds). */
  csv: string | string[];
  /** Output image path; the render CLI writes here. */
  out: string;
  width?: number;
  height?: number;
  title?: string;
  xscale?: AxisScale;
  yscale?: AxisScale;
}

export interface RenderedFigure {
  svg: string;
  width: number;
  height: number;
}

const KINDS: FigureKind[] = ["trajectory", "collapse", "snapshots", "heatmap", "bounds"];

const SCHEMAS: Record<FigureKind, string[]> = {
  trajectory: ["tau", "A", "B", "dA", "dB", "Q", "I"],
  collapse: ["t", "r", "tau", "half_angle", "bisector", "model_B", "model_A"],
  snapshots: ["t", "node_index", "x", "y"],
  heatmap: ["t", "r", "G", "F", "theta_bar", "half_angle", "bisector"],
  bounds: ["r", "xi", "m", "eta", "bound_F", "bound_G"],
};

const DEFAULT_SIZE: Record<FigureKind, [number, number]> = {
  trajectory: [860, 540],
  collapse: [860, 540],
  snapshots: [760, 760],
  heatmap: [860, 540],
  bounds: [860, 540],
};

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

// ---------------------------------------------------------------------------
// Spec validation and dispatch
// ---------------------------------------------------------------------------

export function validateSpec(raw: unknown): FigureSpec {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new Error("figure spec must be a JSON object");
  }
  const spec = raw as Record<string, unknown>;
  const kind = spec.kind;
  if (typeof kind !== "string" || !KINDS.includes(kind as FigureKind)) {
    throw new Error(`unknown figure kind "${String(kind)}" (expected one of ${KINDS.join(", ")})`);
  }
  const csv = spec.csv;
  const csvOk =
    typeof csv === "string" ||
    (Array.isArray(csv) && csv.length > 0 && csv.every((c) => typeof c === "string"));
  if (!csvOk) {
    throw new Error(`figure spec needs "csv": a path or non-empty list of paths`);
  }
  if (typeof spec.out !== "string" || spec.out.length === 0) {
    throw new Error(`figure spec needs "out": the output image path`);
  }
  for (const key of ["width", "height"] as const) {
    const v = spec[key];
    if (v !== undefined && (typeof v !== "number" || !Number.isFinite(v) || v < 80)) {
      throw new Error(`figure spec "${key}" must be a number >= 80`);
    }
  }
  for (const key of ["xscale", "yscale"] as const) {
    const v = spec[key];
    if (v !== undefined && v !== "linear" && v !== "log") {
      throw new Error(`figure spec "${key}" must be "linear" or "log"`);
    }
  }
  if (spec.title !== undefined && typeof spec.title !== "string") {
    throw new Error(`figure spec "title" must be a string`);
  }
  return spec as unknown as FigureSpec;
}

export function renderFigure(rawSpec: unknown, baseDir = "."): RenderedFigure {
  const spec = validateSpec(rawSpec);
  const paths = (Array.isArray(spec.csv) ? spec.csv : [spec.csv]).map((p) => resolve(baseDir, p));
  const tables = paths.map((p) => {
    const t = loadTable(p);
    requireColumns(t, SCHEMAS[spec.kind], spec.kind);
    return t;
  });
  const [dw, dh] = DEFAULT_SIZE[spec.kind];
  const width = spec.width ?? dw;
  const height = spec.height ?? dh;
  let svg: string;
  switch (spec.kind) {
    case "trajectory":
      svg = trajectoryFigure(tables, width, height, spec);
      break;
    case "collapse":
      svg = collapseFigure(tables, width, height, spec);
      break;
    case "snapshots":
      svg = snapshotsFigure(single(tables, "snapshots"), width, height, spec);
      break;
    case "heatmap":
      svg = heatmapFigure(single(tables, "heatmap"), width, height, spec);
      break;
    case "bounds":
      svg = boundsFigure(tables, width, height, spec);
      break;
  }
  return { svg, width, height };
}

function single(tables: Table[], kind: string): Table {
  if (tables.length !== 1) {
    throw new Error(`kind "${kind}" takes a single csv, got ${tables.length}`);
  }
  return tables[0] as Table;
}

function plotFrame(width: number, height: number): Frame {
  return { left: 70, top: 44, width: width - 100, height: height - 104 };
}

interface LegendEntry {
  label: string;
  color: string;
  dash?: string;
}

function legend(frame: Frame, entries: LegendEntry[]): string {
  const parts: string[] = [];
  const x0 = frame.left + frame.width - 170;
  let y = frame.top + 16;
  for (const e of entries) {
    const dash = e.dash ? ` stroke-dasharray="${e.dash}"` : "";
    parts.push(`<line x1="${x0}" y1="${y - 4}" x2="${x0 + 26}" y2="${y - 4}" stroke="${e.color}" stroke-width="2"${dash}/>`);
    parts.push(`<text x="${x0 + 32}" y="${y}" font-size="11" fill="#333">${esc(e.label)}</text>`);
    y += 16;
  }
  return parts.join("\n");
}

function pad(lo: number, hi: number, kind: AxisScale, frac = 0.05): [number, number] {
  if (kind === "log") {
    const f = Math.pow(hi / lo, frac);
    return [lo / f, hi * f];
  }
  const d = (hi - lo || Math.abs(hi) || 1) * frac;
  return [lo - d, hi + d];
}

// ---------------------------------------------------------------------------
// Kind: trajectory -- log-log half-angle decay with a fitted slope
// ---------------------------------------------------------------------------

function trajectoryFigure(tables: Table[], width: number, height: number, spec: FigureSpec): string {
  const xk: AxisScale = spec.xscale ?? "log";
  const yk: AxisScale = spec.yscale ?? "log";
  const series = tables.map((t) => {
    const tau = numericColumn(t, "tau");
    const B = numericColumn(t, "B");
    const xs: number[] = [];
    const ys: number[] = [];
    for (let i = 0; i < tau.length; i++) {
      const tv = tau[i]!;
      const bv = B[i]!;
      if ((xk === "log" && tv <= 0) || (yk === "log" && bv <= 0)) continue;
      xs.push(tv);
      ys.push(bv);
    }
    if (xs.length < 2) {
      throw new Error(`not enough plottable samples in ${t.path} for log axes`);
    }
    return { path: t.path, xs, ys };
  });

  let xLo = Infinity, xHi = -Infinity, yLo = Infinity, yHi = -Infinity;
  for (const s of series) {
    for (const v of s.xs) { xLo = Math.min(xLo, v); xHi = Math.max(xHi, v); }
    for (const v of s.ys) { yLo = Math.min(yLo, v); yHi = Math.max(yHi, v); }
  }
  const frame = plotFrame(width, height);
  const x = makeScale(xk, pad(xLo, xHi, xk), [frame.left, frame.left + frame.width]);
  const y = makeScale(yk, pad(yLo, yHi, yk), [frame.top + frame.height, frame.top]);

  const parts: string[] = [axes(frame, x, y, "tau", "half-angle B")];
  const entries: LegendEntry[] = [];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length] as string;
    parts.push(
      `<path d="${polylinePath(s.xs.map(x), s.ys.map(y))}" fill="none" stroke="${color}" stroke-width="1.6"/>`,
    );
    if (series.length > 1) entries.push({ label: baseName(s.path), color });
  });

  // Fit ln B vs ln tau over the last decade of the first series.
  const first = series[0]!;
  const fit = fitLogSlope(first.xs, first.ys);
  if (fit) {
    const xf = [fit.tauLo, fit.tauHi];
    const yf = xf.map((tv) => Math.exp(fit.intercept + fit.slope * Math.log(tv)));
    parts.push(
      `<path d="${polylinePath(xf.map(x), yf.map(y))}" fill="none" stroke="#222" stroke-width="1.4" stroke-dasharray="6 4"/>`,
    );
    entries.push({ label: `fit slope ${fmt(fit.slope, 4)}`, color: "#222", dash: "6 4" });
    parts.push(
      `<text x="${fmt(x(fit.tauHi))}" y="${fmt(y(yf[1]!) - 8)}" font-size="12" text-anchor="end" fill="#222">slope ${fmt(fit.slope, 4)}</text>`,
    );
  }
  if (entries.length > 0) parts.push(legend(frame, entries));

  return svgDocument(width, height, spec.title ?? "half-angle decay in rescaled time", parts.join("\n"));
}

interface SlopeFit {
  slope: number;
  intercept: number;
  tauLo: number;
  tauHi: number;
}

function fitLogSlope(tau: number[], B: number[]): SlopeFit | null {
  const tauHi = tau[tau.length - 1]!;
  let tauLo = tauHi / 10;
  let lx: number[] = [];
  let ly: number[] = [];
  for (let i = 0; i < tau.length; i++) {
    if (tau[i]! >= tauLo && tau[i]! > 0 && B[i]! > 0) {
      lx.push(Math.log(tau[i]!));
      ly.push(Math.log(B[i]!));
    }
  }
  if (lx.length < 8) {
    // short series: fit whatever is there
    lx = tau.filter((v, i) => v > 0 && B[i]! > 0).map(Math.log);
    ly = B.filter((v, i) => v > 0 && tau[i]! > 0).map(Math.log);
    tauLo = Math.exp(lx[0] ?? Math.log(tauHi));
  }
  if (lx.length < 2) return null;
  const n = lx.length;
  const mx = lx.reduce((a, b) => a + b, 0) / n;
  const my = ly.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (lx[i]! - mx) ** 2;
    sxy += (lx[i]! - mx) * (ly[i]! - my);
  }
  if (sxx === 0) return null;
  const slope = sxy / sxx;
  return { slope, intercept: my - slope * mx, tauLo, tauHi };
}

// ---------------------------------------------------------------------------
// Kind: collapse -- measured half-angle against the model, several radii
// ---------------------------------------------------------------------------

function collapseFigure(tables: Table[], width: number, height: number, spec: FigureSpec): string {
  const xk: AxisScale = spec.xscale ?? "linear";
  const yk: AxisScale = spec.yscale ?? "linear";

  interface RadiusSeries {
    label: string;
    tau: number[];
    half: number[];
    model: number[];
  }
  const series: RadiusSeries[] = [];
  for (const t of tables) {
    const rRaw = rawColumn(t, "r");
    const tau = numericColumn(t, "tau");
    const half = numericColumn(t, "half_angle");
    const model = numericColumn(t, "model_B");
    const byRadius = new Map<string, RadiusSeries>();
    for (let i = 0; i < tau.length; i++) {
      const key = rRaw[i]!;
      let s = byRadius.get(key);
      if (!s) {
        s = { label: `r = ${key}`, tau: [], half: [], model: [] };
        byRadius.set(key, s);
        series.push(s);
      }
      s.tau.push(tau[i]!);
      s.half.push(half[i]!);
      s.model.push(model[i]!);
    }
  }

  let xLo = Infinity, xHi = -Infinity, yLo = Infinity, yHi = -Infinity;
  for (const s of series) {
    for (let i = 0; i < s.tau.length; i++) {
      const tv = s.tau[i]!;
      if (xk === "log" && tv <= 0) continue;
      xLo = Math.min(xLo, tv);
      xHi = Math.max(xHi, tv);
      for (const v of [s.half[i]!, s.model[i]!]) {
        if (yk === "log" && v <= 0) continue;
        yLo = Math.min(yLo, v);
        yHi = Math.max(yHi, v);
      }
    }
  }
  if (!(xHi > xLo)) {
    throw new Error(`collapse input has no usable tau spread`);
  }
  const frame = plotFrame(width, height);
  const x = makeScale(xk, pad(xLo, xHi, xk), [frame.left, frame.left + frame.width]);
  const y = makeScale(yk, pad(yLo, yHi, yk), [frame.top + frame.height, frame.top]);

  const parts: string[] = [axes(frame, x, y, "tau = t |ln r|", "half-angle")];
  const entries: LegendEntry[] = [];
  const keep = (tv: number, v: number) => !(xk === "log" && tv <= 0) && !(yk === "log" && v <= 0);
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length] as string;
    const xs: number[] = [], ys: number[] = [], xm: number[] = [], ym: number[] = [];
    for (let j = 0; j < s.tau.length; j++) {
      if (keep(s.tau[j]!, s.half[j]!)) { xs.push(x(s.tau[j]!)); ys.push(y(s.half[j]!)); }
      if (keep(s.tau[j]!, s.model[j]!)) { xm.push(x(s.tau[j]!)); ym.push(y(s.model[j]!)); }
    }
    parts.push(`<path d="${polylinePath(xs, ys)}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    for (let j = 0; j < xs.length; j++) {
      parts.push(`<circle cx="${fmt(xs[j]!)}" cy="${fmt(ys[j]!)}" r="2.4" fill="${color}"/>`);
    }
    parts.push(
      `<path d="${polylinePath(xm, ym)}" fill="none" stroke="${color}" stroke-width="1.2" stroke-dasharray="5 4" opacity="0.8"/>`,
    );
    entries.push({ label: s.label, color });
  });
  entries.push({ label: "model B(tau)", color: "#555", dash: "5 4" });
  parts.push(legend(frame, entries));

  return svgDocument(width, height, spec.title ?? "angle collapse onto the model curve", parts.join("\n"));
}

// ---------------------------------------------------------------------------
// Kind: snapshots -- boundary curves in 2x2 panels
// ---------------------------------------------------------------------------

interface Contour {
  xs: number[];
  ys: number[];
}

interface SnapshotGroup {
  t: number;
  contours: Contour[];
}

function groupSnapshots(table: Table): SnapshotGroup[] {
  const t = numericColumn(table, "t");
  const ni = numericColumn(table, "node_index");
  const x = numericColumn(table, "x");
  const y = numericColumn(table, "y");
  const groups: SnapshotGroup[] = [];
  let cur: SnapshotGroup | null = null;
  let contour: Contour | null = null;
  let prevIdx = -1;
  for (let i = 0; i < t.length; i++) {
    const ti = t[i]!;
    if (!cur || ti !== cur.t) {
      cur = { t: ti, contours: [] };
      groups.push(cur);
      contour = null;
      prevIdx = -1;
    }
    const idx = ni[i]!;
    // node_index restarts at 0 for each contour inside a snapshot
    if (!contour || idx <= prevIdx) {
      contour = { xs: [], ys: [] };
      cur.contours.push(contour);
    }
    contour.xs.push(x[i]!);
    contour.ys.push(y[i]!);
    prevIdx = idx;
  }
  return groups;
}

function snapshotsFigure(table: Table, width: number, height: number, spec: FigureSpec): string {
  const groups = groupSnapshots(table).sort((a, b) => a.t - b.t);
  let picked: SnapshotGroup[];
  if (groups.length <= 4) {
    picked = groups;
  } else {
    picked = [0, 1, 2, 3].map((k) => groups[Math.round((k * (groups.length - 1)) / 3)] as SnapshotGroup);
  }

  // shared square extent so motion between panels is visible
  let lo = Infinity, hi = -Infinity;
  for (const g of picked) {
    for (const c of g.contours) {
      for (const v of c.xs) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
      for (const v of c.ys) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
    }
  }
  if (!(hi > lo)) {
    throw new Error(`snapshot data in ${table.path} has no spatial extent`);
  }
  const margin = 0.06 * (hi - lo);
  lo -= margin;
  hi += margin;

  const gap = 14;
  const top0 = 40;
  const cell = Math.min((width - 3 * gap) / 2, (height - top0 - 2 * gap - 24) / 2);
  const parts: string[] = [];
  picked.forEach((g, k) => {
    const row = Math.floor(k / 2);
    const col = k % 2;
    const left = gap + col * (cell + gap) + (width - 2 * cell - 3 * gap) / 2;
    const top = top0 + row * (cell + gap + 18);
    const x = makeScale("linear", [lo, hi], [left, left + cell]);
    const y = makeScale("linear", [lo, hi], [top + cell, top]);
    parts.push(`<rect x="${fmt(left)}" y="${fmt(top)}" width="${fmt(cell)}" height="${fmt(cell)}" fill="#fcfcfc" stroke="#444"/>`);
    // corner marker at the origin
    const ox = x(0), oy = y(0);
    parts.push(`<line x1="${fmt(ox - 4)}" y1="${fmt(oy)}" x2="${fmt(ox + 4)}" y2="${fmt(oy)}" stroke="#999" stroke-width="0.8"/>`);
    parts.push(`<line x1="${fmt(ox)}" y1="${fmt(oy - 4)}" x2="${fmt(ox)}" y2="${fmt(oy + 4)}" stroke="#999" stroke-width="0.8"/>`);
    g.contours.forEach((c, ci) => {
      const color = PALETTE[ci % PALETTE.length] as string;
      parts.push(
        `<path d="${polylinePath(c.xs.map(x), c.ys.map(y), true)}" fill="${color}" fill-opacity="0.08" stroke="${color}" stroke-width="1.4"/>`,
      );
    });
    parts.push(
      `<text x="${fmt(left + cell / 2)}" y="${fmt(top + cell + 15)}" font-size="12" text-anchor="middle" fill="#111">t = ${fmt(g.t, 5)}</text>`,
    );
  });

  return svgDocument(width, height, spec.title ?? "patch boundary snapshots", parts.join("\n"));
}

// ---------------------------------------------------------------------------
// Kind: heatmap -- deviation measure F over the (t, r) grid
// ---------------------------------------------------------------------------

function heatmapFigure(table: Table, width: number, height: number, spec: FigureSpec): string {
  const t = numericColumn(table, "t");
  const r = numericColumn(table, "r");
  const F = numericColumn(table, "F");

  const ts = [...new Set(t)].sort((a, b) => a - b);
  const rs = [...new Set(r)].sort((a, b) => a - b);
  if (rs[0]! <= 0) {
    throw new Error(`heatmap needs positive radii, got ${rs[0]}`);
  }
  const cell = new Map<string, number>();
  for (let i = 0; i < t.length; i++) {
    cell.set(`${t[i]}|${r[i]}`, F[i]!);
  }
  let fMax = 0;
  for (const v of cell.values()) fMax = Math.max(fMax, v);
  if (fMax === 0) fMax = 1; // all-zero field renders flat at the low color

  // cell edges at midpoints; radii are log-spaced so midpoints are geometric
  const tEdges = edges(ts, "linear");
  const rEdges = edges(rs, "log");

  const frame = plotFrame(width, height);
  frame.width -= 60; // room for the color bar
  const x = makeScale("linear", [tEdges[0]!, tEdges[tEdges.length - 1]!], [frame.left, frame.left + frame.width]);
  const y = makeScale("log", [rEdges[0]!, rEdges[rEdges.length - 1]!], [frame.top + frame.height, frame.top]);

  const parts: string[] = [];
  for (let i = 0; i < ts.length; i++) {
    for (let j = 0; j < rs.length; j++) {
      const v = cell.get(`${ts[i]}|${rs[j]}`);
      if (v === undefined) continue;
      const x0 = x(tEdges[i]!);
      const x1 = x(tEdges[i + 1]!);
      const y1 = y(rEdges[j]!);
      const y0 = y(rEdges[j + 1]!);
      parts.push(
        `<rect x="${fmt(x0)}" y="${fmt(y0)}" width="${fmt(x1 - x0)}" height="${fmt(y1 - y0)}" fill="${rampColor(v / fMax)}"/>`,
      );
    }
  }
  parts.push(axes(frame, x, y, "t", "r"));

  // color bar
  const barX = frame.left + frame.width + 18;
  const steps = 24;
  const barH = frame.height;
  for (let k = 0; k < steps; k++) {
    const yTop = frame.top + barH - ((k + 1) * barH) / steps;
    parts.push(
      `<rect x="${barX}" y="${fmt(yTop)}" width="14" height="${fmt(barH / steps + 0.5)}" fill="${rampColor((k + 0.5) / steps)}"/>`,
    );
  }
  parts.push(`<rect x="${barX}" y="${frame.top}" width="14" height="${barH}" fill="none" stroke="#444"/>`);
  parts.push(`<text x="${barX + 18}" y="${frame.top + barH + 4}" font-size="10" fill="#333">0</text>`);
  parts.push(`<text x="${barX + 18}" y="${frame.top + 10}" font-size="10" fill="#333">${esc(fmt(fMax, 3))}</text>`);
  parts.push(`<text x="${barX + 7}" y="${frame.top - 8}" font-size="11" text-anchor="middle" fill="#111">F</text>`);

  return svgDocument(width, height, spec.title ?? "deviation from self-similar rotation", parts.join("\n"));
}

function edges(centers: number[], kind: AxisScale): number[] {
  if (centers.length === 1) {
    const c = centers[0]!;
    return kind === "log" ? [c / 1.5, c * 1.5] : [c - 0.5, c + 0.5];
  }
  const mid = (a: number, b: number) => (kind === "log" ? Math.sqrt(a * b) : (a + b) / 2);
  const out: number[] = [];
  const first = centers[0]!;
  const second = centers[1]!;
  out.push(kind === "log" ? first * Math.sqrt(first / second) : first - (second - first) / 2);
  for (let i = 0; i + 1 < centers.length; i++) out.push(mid(centers[i]!, centers[i + 1]!));
  const last = centers[centers.length - 1]!;
  const prev = centers[centers.length - 2]!;
  out.push(kind === "log" ? last * Math.sqrt(last / prev) : last + (last - prev) / 2);
  return out;
}

// ---------------------------------------------------------------------------
// Kind: bounds -- certified decay against corner depth
// ---------------------------------------------------------------------------

function boundsFigure(tables: Table[], width: number, height: number, spec: FigureSpec): string {
  const xk: AxisScale = spec.xscale ?? "log";
  const yk: AxisScale = spec.yscale ?? "log";

  interface BoundSeries {
    label: string;
    L: number[];
    F: number[];
    G: number[];
  }
  const series: BoundSeries[] = tables.map((t) => {
    const L = rawColumn(t, "r").map((cell) => logRadiusMagnitude(cell, t.path));
    const F = numericColumn(t, "bound_F");
    const G = numericColumn(t, "bound_G");
    const order = L.map((_, i) => i).sort((a, b) => L[a]! - L[b]!);
    return {
      label: baseName(t.path),
      L: order.map((i) => L[i]!),
      F: order.map((i) => F[i]!),
      G: order.map((i) => G[i]!),
    };
  });

  let xLo = Infinity, xHi = -Infinity, yLo = Infinity, yHi = -Infinity;
  for (const s of series) {
    for (let i = 0; i < s.L.length; i++) {
      if (xk === "log" && s.L[i]! <= 0) continue;
      xLo = Math.min(xLo, s.L[i]!);
      xHi = Math.max(xHi, s.L[i]!);
      for (const v of [s.F[i]!, s.G[i]!]) {
        if (yk === "log" && v <= 0) continue;
        yLo = Math.min(yLo, v);
        yHi = Math.max(yHi, v);
      }
    }
  }
  if (!(xHi > xLo)) {
    throw new Error(`bounds input needs at least two distinct radii`);
  }
  const frame = plotFrame(width, height);
  const x = makeScale(xk, pad(xLo, xHi, xk), [frame.left, frame.left + frame.width]);
  const y = makeScale(yk, pad(yLo, yHi, yk), [frame.top + frame.height, frame.top]);

  const parts: string[] = [axes(frame, x, y, "corner depth |ln r|", "certified bound")];
  const entries: LegendEntry[] = [];
  series.forEach((s, si) => {
    const cF = PALETTE[(2 * si) % PALETTE.length] as string;
    const cG = PALETTE[(2 * si + 1) % PALETTE.length] as string;
    const keepY = (v: number) => !(yk === "log" && v <= 0);
    const fx: number[] = [], fy: number[] = [], gx: number[] = [], gy: number[] = [];
    for (let i = 0; i < s.L.length; i++) {
      if (keepY(s.F[i]!)) { fx.push(x(s.L[i]!)); fy.push(y(s.F[i]!)); }
      if (keepY(s.G[i]!)) { gx.push(x(s.L[i]!)); gy.push(y(s.G[i]!)); }
    }
    parts.push(`<path d="${polylinePath(fx, fy)}" fill="none" stroke="${cF}" stroke-width="1.6"/>`);
    for (let i = 0; i < fx.length; i++) {
      parts.push(`<circle cx="${fmt(fx[i]!)}" cy="${fmt(fy[i]!)}" r="3" fill="${cF}"/>`);
    }
    parts.push(`<path d="${polylinePath(gx, gy)}" fill="none" stroke="${cG}" stroke-width="1.6"/>`);
    for (let i = 0; i < gx.length; i++) {
      parts.push(
        `<rect x="${fmt(gx[i]! - 2.6)}" y="${fmt(gy[i]! - 2.6)}" width="5.2" height="5.2" fill="${cG}"/>`,
      );
    }
    const tag = series.length > 1 ? ` (${s.label})` : "";
    entries.push({ label: `deviation bound F${tag}`, color: cF });
    entries.push({ label: `angle bound G${tag}`, color: cG });
  });
  parts.push(legend(frame, entries));

  return svgDocument(width, height, spec.title ?? "certified bounds vs corner depth", parts.join("\n"));
}

function baseName(p: string): string {
  const i = Math.max(p.lastIndexOf("/"), p.lastIndexOf("\\"));
  return i >= 0 ? p.slice(i + 1) : p;
}
