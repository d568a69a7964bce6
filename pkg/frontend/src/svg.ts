// Shared SVG plumbing: scales, ticks, axes, paths.
//
// Everything here is pure string assembly.  No timestamps, no randomness,
// and one fixed number formatter, so a figure rendered twice from the same
// CSV is byte-identical.

export type AxisScale = "linear" | "log";

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Deterministic short form for coordinates and tick labels. */
export function fmt(v: number, digits = 6): string {
  if (v === 0) return "0";
  if (!Number.isFinite(v)) return String(v);
  const s = v.toPrecision(digits);
  // trim trailing zeros without touching exponents
  if (s.includes("e")) {
    const [mant, exp] = s.split("e") as [string, string];
    return trimZeros(mant) + "e" + exp;
  }
  return trimZeros(s);
}

function trimZeros(s: string): string {
  return s.includes(".") ? s.replace(/0+$/, "").replace(/\.$/, "") : s;
}

// ---------------------------------------------------------------------------
// Scales and ticks
// ---------------------------------------------------------------------------

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
  kind: AxisScale;
}

export function makeScale(kind: AxisScale, domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  let fn: (v: number) => number;
  if (kind === "log") {
    if (d0 <= 0 || d1 <= 0) {
      throw new Error(`log scale needs a positive domain, got [${d0}, ${d1}]`);
    }
    const l0 = Math.log(d0);
    const span = Math.log(d1) - l0 || 1;
    fn = (v) => r0 + ((Math.log(v) - l0) / span) * (r1 - r0);
  } else {
    const span = d1 - d0 || 1;
    fn = (v) => r0 + ((v - d0) / span) * (r1 - r0);
  }
  const s = fn as Scale;
  s.domain = domain;
  s.range = range;
  s.kind = kind;
  return s;
}

/** Round tick positions at 1/2/5 steps covering [min, max]. */
export function niceTicks(min: number, max: number, count = 6): number[] {
  if (!(max > min)) return [min];
  const rawStep = (max - min) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 5, 10]) {
    if (mag * mult >= rawStep) {
      step = mag * mult;
      break;
    }
  }
  const ticks: number[] = [];
  const start = Math.ceil(min / step) * step;
  for (let v = start; v <= max + step * 1e-9; v += step) {
    // snap near-zero accumulation error
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

/** Powers of ten inside [min, max]; falls back to nice ticks under one decade. */
export function logTicks(min: number, max: number): number[] {
  const lo = Math.ceil(Math.log10(min) - 1e-9);
  const hi = Math.floor(Math.log10(max) + 1e-9);
  if (hi - lo < 1) return niceTicks(min, max, 4);
  const ticks: number[] = [];
  const stride = Math.max(1, Math.ceil((hi - lo) / 8));
  for (let e = lo; e <= hi; e += stride) ticks.push(Math.pow(10, e));
  return ticks;
}

export function tickLabel(v: number, kind: AxisScale): string {
  if (kind === "log") {
    const e = Math.log10(v);
    if (Math.abs(e - Math.round(e)) < 1e-9) {
      const n = Math.round(e);
      return n >= -3 && n <= 3 ? fmt(v, 4) : `1e${n}`;
    }
  }
  return fmt(v, 4);
}

// ---------------------------------------------------------------------------
// Axes and series
// ---------------------------------------------------------------------------

export interface Frame {
  left: number;
  top: number;
  width: number;
  height: number;
}

export function axes(
  frame: Frame,
  x: Scale,
  y: Scale,
  xLabel: string,
  yLabel: string,
): string {
  const { left, top, width, height } = frame;
  const bottom = top + height;
  const right = left + width;
  const parts: string[] = [];
  parts.push(
    `<rect x="${left}" y="${top}" width="${width}" height="${height}" fill="none" stroke="#444" stroke-width="1"/>`,
  );
  const xTicks = x.kind === "log" ? logTicks(x.domain[0], x.domain[1]) : niceTicks(x.domain[0], x.domain[1]);
  for (const t of xTicks) {
    if (t < x.domain[0] - 1e-12 || t > x.domain[1] * (x.kind === "log" ? 1 + 1e-12 : 1) + 1e-12) continue;
    const px = x(t);
    parts.push(`<line x1="${fmt(px)}" y1="${bottom}" x2="${fmt(px)}" y2="${bottom + 5}" stroke="#444"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${bottom + 18}" font-size="11" text-anchor="middle" fill="#333">${esc(tickLabel(t, x.kind))}</text>`,
    );
    if (t > x.domain[0]) {
      parts.push(
        `<line x1="${fmt(px)}" y1="${top}" x2="${fmt(px)}" y2="${bottom}" stroke="#ddd" stroke-width="0.6"/>`,
      );
    }
  }
  const yTicks = y.kind === "log" ? logTicks(y.domain[0], y.domain[1]) : niceTicks(y.domain[0], y.domain[1]);
  for (const t of yTicks) {
    if (t < y.domain[0] - 1e-12 || t > y.domain[1] * (y.kind === "log" ? 1 + 1e-12 : 1) + 1e-12) continue;
    const py = y(t);
    parts.push(`<line x1="${left - 5}" y1="${fmt(py)}" x2="${left}" y2="${fmt(py)}" stroke="#444"/>`);
    parts.push(
      `<text x="${left - 8}" y="${fmt(py + 4)}" font-size="11" text-anchor="end" fill="#333">${esc(tickLabel(t, y.kind))}</text>`,
    );
    if (t > y.domain[0]) {
      parts.push(
        `<line x1="${left}" y1="${fmt(py)}" x2="${right}" y2="${fmt(py)}" stroke="#ddd" stroke-width="0.6"/>`,
      );
    }
  }
  parts.push(
    `<text x="${fmt(left + width / 2)}" y="${bottom + 36}" font-size="12" text-anchor="middle" fill="#111">${esc(xLabel)}</text>`,
  );
  parts.push(
    `<text x="${left - 44}" y="${fmt(top + height / 2)}" font-size="12" text-anchor="middle" fill="#111" transform="rotate(-90 ${left - 44} ${fmt(top + height / 2)})">${esc(yLabel)}</text>`,
  );
  return parts.join("\n");
}

export function polylinePath(xs: number[], ys: number[], close = false): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    pts.push(`${i === 0 ? "M" : "L"}${fmt(xs[i] as number)} ${fmt(ys[i] as number)}`);
  }
  if (close) pts.push("Z");
  return pts.join(" ");
}

export function svgDocument(width: number, height: number, title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
    `<text x="${fmt(width / 2)}" y="24" font-size="15" text-anchor="middle" fill="#111">${esc(title)}</text>`,
    body,
    `</svg>`,
    ``,
  ].join("\n");
}

/** Two-stop color ramp used by the heat map, interpolated in RGB. */
export function rampColor(t: number): string {
  const lo = [0xf7, 0xfb, 0xff];
  const hi = [0x08, 0x30, 0x6b];
  const u = Math.min(1, Math.max(0, t));
  const rgb = lo.map((c, i) => Math.round(c + u * ((hi[i] as number) - c)));
  return `#${rgb.map((c) => c.toString(16).padStart(2, "0")).join("")}`;
}
