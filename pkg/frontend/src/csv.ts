/** Strict reader for quenchkit CSV outputs (numeric cells, '' for absent). */

import fs from "node:fs";
import Papa from "papaparse";

export class DataError extends Error {}

export interface Table {
  path: string;
  columns: string[];
  data: Map<string, Float64Array>;
  rows: number;
}

export function readTable(filePath: string): Table {
  let text: string;
  try {
    text = fs.readFileSync(filePath, "utf8");
  } catch (err) {
    throw new DataError(`cannot read ${filePath}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<string[]>(text.trim(), { skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    throw new DataError(`${filePath}: ${parsed.errors[0].message}`);
  }
  const grid = parsed.data;
  if (grid.length === 0) throw new DataError(`${filePath}: empty file`);
  const columns = grid[0].map((c) => c.trim());
  if (grid.length < 2) {
    throw new DataError(`${filePath}: no data rows (columns: ${columns.join(", ")})`);
  }
  const rows = grid.length - 1;
  const data = new Map<string, Float64Array>();
  columns.forEach((name, j) => {
    const values = new Float64Array(rows);
    for (let i = 0; i < rows; i++) {
      const cell = (grid[i + 1][j] ?? "").trim();
      if (cell === "" || cell === "None") {
        values[i] = NaN;
      } else {
        const v = Number(cell);
        if (!Number.isFinite(v) && cell.toLowerCase() !== "nan") {
          throw new DataError(`${filePath}: non-numeric cell '${cell}' in column '${name}'`);
        }
        values[i] = v;
      }
    }
    data.set(name, values);
  });
  return { path: filePath, columns, data, rows };
}

export function getColumn(table: Table, column: string): Float64Array {
  const values = table.data.get(column);
  if (values === undefined) {
    throw new DataError(
      `column '${column}' not found in ${table.path}; available columns: ${table.columns.join(", ")}`,
    );
  }
  return values;
}
