export { renderFigure, validateSpec } from "./figures.js";
export type { FigureSpec, FigureKind, RenderedFigure } from "./figures.js";
export { loadTable, parseCsv, requireColumns, numericColumn, rawColumn, logRadiusMagnitude } from "./csv.js";
export type { Table } from "./csv.js";
