/** Strict little CSV reader for the harness outputs (no quoting, no escapes —
 * the producers never emit either). */

export interface Table {
  /** Source path, kept for error messages. */
  readonly path: string;
  readonly header: readonly string[];
  readonly rows: readonly (readonly string[])[];
}

export class MissingColumnError extends Error {
  constructor(readonly column: string, readonly path: string) {
    super(`missing column "${column}" in ${path}`);
    this.name = "MissingColumnError";
  }
}

export function parseCsv(text: string, path: string): Table {
  const lines = text.split("\n").filter((l) => l.trim() !== "");
  if (lines.length === 0) {
    throw new Error(`empty CSV: ${path}`);
  }
  const header = lines[0]!.split(",").map((h) => h.trim());
  const rows = lines.slice(1).map((line, i) => {
    const cells = line.split(",").map((c) => c.trim());
    if (cells.length !== header.length) {
      throw new Error(
        `${path}: row ${i + 2} has ${cells.length} cells, header has ${header.length}`,
      );
    }
    return cells;
  });
  return { path, header, rows };
}

/** Index of a named column; throws MissingColumnError if absent. */
export function columnIndex(table: Table, column: string): number {
  const idx = table.header.indexOf(column);
  if (idx < 0) {
    throw new MissingColumnError(column, table.path);
  }
  return idx;
}

/** Numeric values of a named column, in row order. */
export function numericColumn(table: Table, column: string): number[] {
  const idx = columnIndex(table, column);
  return table.rows.map((row, i) => {
    const v = Number(row[idx]);
    if (!Number.isFinite(v)) {
      throw new Error(
        `${table.path}: row ${i + 2}, column "${column}": not a number: ${row[idx]}`,
      );
    }
    return v;
  });
}

/** String values of a named column, in row order. */
export function stringColumn(table: Table, column: string): string[] {
  const idx = columnIndex(table, column);
  return table.rows.map((row) => row[idx]!);
}
