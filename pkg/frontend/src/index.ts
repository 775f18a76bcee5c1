export { parseCsv, columnIndex, numericColumn, stringColumn, MissingColumnError } from "./csv.js";
export type { Table } from "./csv.js";
export { parseFigureSpec, renderFigure } from "./figure.js";
export type { FigureSpec } from "./figure.js";
