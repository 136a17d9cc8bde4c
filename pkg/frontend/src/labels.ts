/** Label table: a CSV with `path,labels` columns where the labels cell is a
 * semicolon-separated list. Paths are normalized to forward slashes so the
 * table joins against image ids regardless of the platform it was written
 * on. */

import { existsSync, readFileSync } from 'node:fs';

import Papa from 'papaparse';

import { DataError, ValidationError } from './errors.js';

export type LabelTable = Map<string, string[]>;

export function parseLabelCsv(text: string, source = 'labels'): LabelTable {
  const parsed = Papa.parse<string[]>(text.trim(), { delimiter: ',', skipEmptyLines: true });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new ValidationError(`${source}: row ${(first.row ?? 0) + 1}: ${first.message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new ValidationError(`${source}: empty label table`);
  }
  let start = 0;
  const head = rows[0].map((c) => c.trim().toLowerCase());
  if (head.length >= 2 && head[0] === 'path' && head[1] === 'labels') {
    start = 1;
  }
  const table: LabelTable = new Map();
  for (let i = start; i < rows.length; i++) {
    const row = rows[i];
    if (row.length < 2) {
      throw new ValidationError(`${source}: row ${i + 1}: expected 'path,labels', got ${row.length} column(s)`);
    }
    const key = row[0].trim().split('\\').join('/');
    if (!key) {
      throw new ValidationError(`${source}: row ${i + 1}: empty path`);
    }
    const labels = row[1]
      .split(';')
      .map((s) => s.trim())
      .filter((s) => s.length > 0);
    if (labels.length === 0) {
      throw new ValidationError(`${source}: empty label set for '${key}'`);
    }
    if (table.has(key)) {
      throw new ValidationError(`${source}: duplicate path '${key}'`);
    }
    table.set(key, labels);
  }
  if (table.size === 0) {
    throw new ValidationError(`${source}: empty label table`);
  }
  return table;
}

export function loadLabelCsv(path: string): LabelTable {
  if (!existsSync(path)) {
    throw new DataError(`no such file: ${path}`);
  }
  return parseLabelCsv(readFileSync(path, 'utf8'), path);
}
