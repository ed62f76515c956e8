/** CSV loading with strict column-schema checks and useful diffs. */

import * as fs from "fs";

export class SchemaError extends Error {}
export class EmptyCsvError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function loadCsv(path: string): Table {
  const text = fs.readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new EmptyCsvError(`${path}: file is empty`);
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  return { header, rows };
}

export function requireColumns(table: Table, expected: string[], path: string): void {
  const got = table.header;
  if (got.length === expected.length && expected.every((c, i) => got[i] === c)) {
    if (table.rows.length === 0) {
      throw new EmptyCsvError(`${path}: no data rows`);
    }
    return;
  }
  const missing = expected.filter((c) => !got.includes(c));
  const unexpected = got.filter((c) => !expected.includes(c));
  const parts = [`${path}: column schema mismatch`];
  parts.push(`  expected: ${expected.join(",")}`);
  parts.push(`  found:    ${got.join(",")}`);
  if (missing.length) parts.push(`  missing:  ${missing.join(",")}`);
  if (unexpected.length) parts.push(`  extra:    ${unexpected.join(",")}`);
  throw new SchemaError(parts.join("\n"));
}

export function numericColumn(table: Table, name: string): number[] {
  const idx = table.header.indexOf(name);
  return table.rows.map((r) => Number(r[idx]));
}

/** Extract a scalar's raw JSON token so annotations stay verbatim. */
export function rawScalarToken(manifestText: string, key: string): string | null {
  const m = manifestText.match(
    new RegExp(`"${key}"\\s*:\\s*(-?[0-9]+(?:\\.[0-9]+)?(?:[eE][-+]?[0-9]+)?)`)
  );
  return m ? m[1] : null;
}
