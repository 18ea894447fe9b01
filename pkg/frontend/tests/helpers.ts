/** Shared fixtures plumbing for the reader tests. */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

export const TESTDATA = fileURLToPath(new URL("../testdata", import.meta.url));

export function fixture(...parts: string[]): string {
  return path.join(TESTDATA, ...parts);
}

/** Copy a fixture directory into a fresh temp dir and return its path. */
export function copyFixture(name: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "reader-test-"));
  fs.cpSync(fixture(name), dir, { recursive: true });
  return dir;
}

export function tempDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "reader-test-"));
}

/** Minimal RFC-4180 CSV parser (quotes, CRLF); enough for the export
 * files, which never nest separators anyway. */
export function parseCsv(text: string): string[][] {
  const rows: string[][] = [];
  let row: string[] = [];
  let field = "";
  let inQuotes = false;
  for (let i = 0; i < text.length; i += 1) {
    const ch = text[i]!;
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 1;
        } else {
          inQuotes = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      inQuotes = true;
    } else if (ch === ",") {
      row.push(field);
      field = "";
    } else if (ch === "\n") {
      row.push(field);
      rows.push(row);
      row = [];
      field = "";
    } else if (ch !== "\r") {
      field += ch;
    }
  }
  if (field.length > 0 || row.length > 0) {
    row.push(field);
    rows.push(row);
  }
  return rows;
}

/** Read a CSV file into one object per data row, keyed by header. */
export function csvObjects(csvPath: string): Record<string, string>[] {
  const rows = parseCsv(fs.readFileSync(csvPath, "utf-8"));
  const header = rows[0];
  if (header === undefined) throw new Error(`${csvPath}: empty CSV`);
  return rows.slice(1).map((cells) =>
    Object.fromEntries(header.map((name, i) => [name, cells[i] ?? ""])));
}

/** True when a CSV cell and a stored value are the same float32. The
 * export prints shortest-round-trip decimals, so parsing a cell and
 * rounding to float32 must recover the stored bits exactly. */
export function sameF32(cell: string, value: number): boolean {
  return Object.is(Math.fround(Number(cell)), Math.fround(value));
}
