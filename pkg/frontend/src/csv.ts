// CSV loading for the figure renderer.
//
// The upstream CLI writes plain comma-separated files with a single header
// line and no quoting, so the parser here is deliberately minimal.  Values
// are kept as raw strings until a figure asks for a numeric column: the
// bounds table stores radii like "e-1000" whose float value underflows to
// zero, and those tokens must survive the round trip untouched.

import { readFileSync } from "node:fs";

export interface Table {
  /** Path the table was loaded from, used in error messages. */
  path: string;
  header: string[];
  /** Data rows, same length as header (short rows are rejected). */
  rows: string[][];
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

export function parseCsv(text: string, path: string): Table {
  const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new Error(`empty file: ${path}`);
  }
  const header = (lines[0] as string).split(",").map((h) => h.trim());
  const rows: string[][] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = (lines[i] as string).split(",");
    if (cells.length !== header.length) {
      throw new Error(
        `malformed row ${i + 1} in ${path}: expected ${header.length} cells, got ${cells.length}`,
      );
    }
    rows.push(cells);
  }
  return { path, header, rows };
}

export function loadTable(path: string): Table {
  return parseCsv(readFileSync(path, "utf8"), path);
}

// ---------------------------------------------------------------------------
// Schema checks and column access
// ---------------------------------------------------------------------------

/**
 * Fail fast if any required column is missing.  The first missing column is
 * named in the error so a bad spec points straight at the problem.
 */
export function requireColumns(table: Table, required: string[], kind: string): void {
  for (const name of required) {
    if (!table.header.includes(name)) {
      throw new Error(
        `schema mismatch in ${table.path}: missing column "${name}" ` +
          `(kind "${kind}" expects ${required.join(",")})`,
      );
    }
  }
  if (table.rows.length === 0) {
    throw new Error(`no data rows in ${table.path}`);
  }
}

export function rawColumn(table: Table, name: string): string[] {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new Error(`schema mismatch in ${table.path}: missing column "${name}"`);
  }
  return table.rows.map((row) => row[idx] as string);
}

export function numericColumn(table: Table, name: string): number[] {
  return rawColumn(table, name).map((cell, i) => {
    const v = Number(cell);
    if (!Number.isFinite(v)) {
      throw new Error(`non-numeric value "${cell}" in column "${name}" row ${i + 2} of ${table.path}`);
    }
    return v;
  });
}

/**
 * Log-radius magnitude |ln r| for a radius cell.  "e-N" tokens denote
 * r = exp(-N) for N far beyond float range, so they are decoded from the
 * text; ordinary numeric radii in (0, 1) go through Math.log.
 */
export function logRadiusMagnitude(cell: string, path: string): number {
  const m = /^e-(\d+(?:\.\d+)?)$/.exec(cell.trim());
  if (m) {
    return Number(m[1]);
  }
  const r = Number(cell);
  if (!Number.isFinite(r) || r <= 0 || r >= 1) {
    throw new Error(`radius "${cell}" in ${path} is not in (0, 1) and is not an e-N token`);
  }
  return -Math.log(r);
}
