import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import * as path from 'node:path';

import { describe, expect, it } from 'vitest';

import { DataError, ValidationError } from '../src/errors.js';
import {
  InterchangeRecord,
  recordToLine,
  verifyInterchange,
  writeInterchange,
} from '../src/interchange.js';

function tmpFile(content: string): string {
  const dir = mkdtempSync(path.join(tmpdir(), 'interchange-'));
  const p = path.join(dir, 'records.jsonl');
  writeFileSync(p, content);
  return p;
}

const GOOD: InterchangeRecord = { id: 'a.png', labels: ['chest'], vector: [1, 2, 3] };

describe('writeInterchange / verifyInterchange round trip', () => {
  it('writes one JSON object per line and verifies cleanly', () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'interchange-'));
    const p = path.join(dir, 'out.jsonl');
    writeInterchange(p, [
      GOOD,
      { id: 'b.png', labels: ['hand', 'wrist'], vector: [4, 5, 6], split: 'external' },
    ]);
    const report = verifyInterchange(p);
    expect(report.records).toBe(2);
    expect(report.dimension).toBe(3);
  });

  it('serializes optional fields only when present', () => {
    expect(recordToLine(GOOD)).toBe('{"id":"a.png","labels":["chest"],"vector":[1,2,3]}');
    const full = recordToLine({ ...GOOD, split: 'query', anomaly_score: 0.5, bin_id: 2 });
    expect(full).toContain('"split":"query"');
    expect(full).toContain('"anomaly_score":0.5');
    expect(full).toContain('"bin_id":2');
  });
});

describe('verifyInterchange diagnostics', () => {
  it('names the offending line for invalid JSON', () => {
    const p = tmpFile(recordToLine(GOOD) + '\n{broken\n');
    expect(() => verifyInterchange(p)).toThrow(/line 2: invalid JSON/);
  });

  it('rejects non-object lines', () => {
    const p = tmpFile('[1,2,3]\n');
    expect(() => verifyInterchange(p)).toThrow(/line 1: expected an object/);
  });

  it('reports missing fields by name', () => {
    const p = tmpFile('{"id":"x","labels":["a"]}\n');
    expect(() => verifyInterchange(p)).toThrow(/line 1: missing field 'vector'/);
  });

  it('rejects empty ids', () => {
    const p = tmpFile('{"id":"","labels":["a"],"vector":[1]}\n');
    expect(() => verifyInterchange(p)).toThrow(/id must be a non-empty string/);
  });

  it('rejects non-string labels', () => {
    const p = tmpFile('{"id":"x","labels":[1],"vector":[1]}\n');
    expect(() => verifyInterchange(p)).toThrow(/labels must be an array of strings/);
  });

  it("rejects an empty labels array with 'empty label set'", () => {
    const p = tmpFile('{"id":"x","labels":[],"vector":[1]}\n');
    expect(() => verifyInterchange(p)).toThrow(/record 'x': empty label set/);
  });

  it('rejects empty vectors', () => {
    const p = tmpFile('{"id":"x","labels":["a"],"vector":[]}\n');
    expect(() => verifyInterchange(p)).toThrow(/record 'x': empty vector/);
  });

  it('rejects non-numeric vector entries', () => {
    const p = tmpFile('{"id":"x","labels":["a"],"vector":[1,"two"]}\n');
    expect(() => verifyInterchange(p)).toThrow(/non-finite value in vector/);
  });

  it('rejects a hand-corrupted vector length at the offending line', () => {
    const p = tmpFile(
      [
        recordToLine({ id: 'a', labels: ['x'], vector: [1, 2, 3] }),
        recordToLine({ id: 'b', labels: ['x'], vector: [4, 5, 6] }),
        recordToLine({ id: 'c', labels: ['x'], vector: [7, 8] }),
      ].join('\n') + '\n',
    );
    expect(() => verifyInterchange(p)).toThrow(/line 3: dimension mismatch \(got 2, expected 3\)/);
  });

  it('rejects duplicate ids at the second occurrence', () => {
    const p = tmpFile(recordToLine(GOOD) + '\n' + recordToLine(GOOD) + '\n');
    expect(() => verifyInterchange(p)).toThrow(/line 2: duplicate id 'a.png'/);
  });

  it('rejects unknown splits', () => {
    const p = tmpFile('{"id":"x","labels":["a"],"vector":[1],"split":"test"}\n');
    expect(() => verifyInterchange(p)).toThrow(/unknown split 'test'/);
  });

  it('rejects bin_id without anomaly_score', () => {
    const p = tmpFile('{"id":"x","labels":["a"],"vector":[1],"bin_id":0}\n');
    expect(() => verifyInterchange(p)).toThrow(/bin_id present without anomaly_score/);
  });

  it('rejects an empty file', () => {
    const p = tmpFile('');
    expect(() => verifyInterchange(p)).toThrow(ValidationError);
    expect(() => verifyInterchange(p)).toThrow(/empty input/);
  });

  it('raises a data error for a missing file', () => {
    expect(() => verifyInterchange('/nonexistent/out.jsonl')).toThrow(DataError);
  });
});
