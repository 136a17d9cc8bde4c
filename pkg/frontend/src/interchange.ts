/** The line-delimited interchange format the downstream retrieval pipeline
 * ingests: one JSON object per line with `id`, `labels` and `vector` fields
 * plus optional `split`, `anomaly_score` and `bin_id`. `verifyInterchange`
 * re-applies the ingest-side validation rules — line-numbered diagnostics,
 * uniform dimension, unique non-empty ids, non-empty label sets, finite
 * vectors — so a file that passes here loads cleanly downstream. */

import { existsSync, readFileSync, writeFileSync } from 'node:fs';

import { DataError, ValidationError } from './errors.js';

export interface InterchangeRecord {
  id: string;
  labels: string[];
  vector: number[];
  split?: string;
  anomaly_score?: number;
  bin_id?: number;
}

export interface VerifyReport {
  records: number;
  dimension: number;
}

const SPLITS = new Set(['internal', 'external', 'query']);

export function recordToLine(rec: InterchangeRecord): string {
  const obj: Record<string, unknown> = {
    id: rec.id,
    labels: rec.labels,
    vector: rec.vector,
  };
  if (rec.split !== undefined) obj.split = rec.split;
  if (rec.anomaly_score !== undefined) obj.anomaly_score = rec.anomaly_score;
  if (rec.bin_id !== undefined) obj.bin_id = rec.bin_id;
  return JSON.stringify(obj);
}

export function writeInterchange(path: string, records: InterchangeRecord[]): void {
  writeFileSync(path, records.map(recordToLine).join('\n') + '\n');
}

function checkRecord(obj: Record<string, unknown>, lineno: number): { id: string; dim: number } {
  for (const key of ['id', 'labels', 'vector'] as const) {
    if (!(key in obj)) {
      throw new ValidationError(`line ${lineno}: missing field '${key}'`);
    }
  }
  const id = obj.id;
  if (typeof id !== 'string' || id.length === 0) {
    throw new ValidationError(`line ${lineno}: id must be a non-empty string`);
  }
  const labels = obj.labels;
  if (!Array.isArray(labels) || labels.some((x) => typeof x !== 'string')) {
    throw new ValidationError(`line ${lineno}: labels must be an array of strings`);
  }
  if (labels.length === 0) {
    throw new ValidationError(`line ${lineno}: record '${id}': empty label set`);
  }
  const vector = obj.vector;
  if (!Array.isArray(vector) || vector.length === 0) {
    throw new ValidationError(`line ${lineno}: record '${id}': empty vector`);
  }
  if (vector.some((x) => typeof x !== 'number' || !Number.isFinite(x))) {
    throw new ValidationError(`line ${lineno}: record '${id}': non-finite value in vector`);
  }
  if ('split' in obj && !SPLITS.has(obj.split as string)) {
    throw new ValidationError(`line ${lineno}: record '${id}': unknown split '${String(obj.split)}'`);
  }
  if ('anomaly_score' in obj) {
    const score = obj.anomaly_score;
    if (typeof score !== 'number' || !Number.isFinite(score)) {
      throw new ValidationError(`line ${lineno}: record '${id}': non-finite anomaly score`);
    }
  }
  if ('bin_id' in obj) {
    if (!('anomaly_score' in obj)) {
      throw new ValidationError(`line ${lineno}: record '${id}': bin_id present without anomaly_score`);
    }
    if (typeof obj.bin_id !== 'number' || !Number.isInteger(obj.bin_id) || obj.bin_id < 0) {
      throw new ValidationError(`line ${lineno}: record '${id}': negative bin_id`);
    }
  }
  return { id, dim: vector.length };
}

export function verifyInterchange(path: string): VerifyReport {
  if (!existsSync(path)) {
    throw new DataError(`no such file: ${path}`);
  }
  const lines = readFileSync(path, 'utf8').split('\n');
  const seen = new Set<string>();
  let dim: number | null = null;
  let count = 0;
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const lineno = i + 1;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (exc) {
      throw new ValidationError(`line ${lineno}: invalid JSON (${(exc as Error).message})`);
    }
    if (typeof obj !== 'object' || obj === null || Array.isArray(obj)) {
      throw new ValidationError(`line ${lineno}: expected an object`);
    }
    const { id, dim: recDim } = checkRecord(obj as Record<string, unknown>, lineno);
    if (dim === null) {
      dim = recDim;
    } else if (recDim !== dim) {
      throw new ValidationError(`line ${lineno}: dimension mismatch (got ${recDim}, expected ${dim})`);
    }
    if (seen.has(id)) {
      throw new ValidationError(`line ${lineno}: duplicate id '${id}'`);
    }
    seen.add(id);
    count++;
  }
  if (count === 0) {
    throw new ValidationError(`empty input: ${path}`);
  }
  return { records: count, dimension: dim as number };
}
