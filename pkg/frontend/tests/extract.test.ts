import { spawnSync } from 'node:child_process';
import { copyFileSync, mkdirSync, mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { ValidationError } from '../src/errors.js';
import { extract } from '../src/extract.js';
import { InterchangeRecord, verifyInterchange } from '../src/interchange.js';
import { FEATURE_DIM } from '../src/resnet.js';

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), 'fixtures');
const IMAGES = path.join(FIXTURES, 'images');
const LABELS = path.join(FIXTURES, 'labels.csv');

function readRecords(p: string): InterchangeRecord[] {
  return readFileSync(p, 'utf8')
    .trim()
    .split('\n')
    .map((line) => JSON.parse(line) as InterchangeRecord);
}

function tmp(): string {
  return mkdtempSync(path.join(tmpdir(), 'extract-'));
}

describe('extract contract on the bundled fixture', () => {
  it('ten images -> ten valid 512-dim records, reruns element-wise identical, ingestable downstream', () => {
    const dir = tmp();
    const out1 = path.join(dir, 'run1.jsonl');
    const out2 = path.join(dir, 'run2.jsonl');

    const report1 = extract({ imageRoot: IMAGES, labelSource: LABELS, out: out1, log: () => {} });
    expect(report1.written).toBe(10);
    expect(report1.dimension).toBe(FEATURE_DIM);
    expect(report1.skipped).toEqual([]);

    const records = readRecords(out1);
    expect(records).toHaveLength(10);
    for (const rec of records) {
      expect(rec.vector).toHaveLength(FEATURE_DIM);
      expect(rec.labels.length).toBeGreaterThan(0);
    }
    expect(records.map((r) => r.id)).toEqual([
      'chest/front_0001.png',
      'chest/front_0002.png',
      'chest/lateral_0001.jpg',
      'gray_scan.png',
      'hand_0001.png',
      'hand_0002.jpg',
      'knee_0001.png',
      'overlay_rgba.png',
      'skull_0001.png',
      'spine_0001.png',
    ]);
    expect(records.find((r) => r.id === 'chest/front_0001.png')?.labels).toEqual(['chest', 'frontal']);

    const verdict = verifyInterchange(out1);
    expect(verdict).toEqual({ records: 10, dimension: FEATURE_DIM });

    const report2 = extract({ imageRoot: IMAGES, labelSource: LABELS, out: out2, log: () => {} });
    expect(report2.written).toBe(10);
    const rerun = readRecords(out2);
    for (let i = 0; i < records.length; i++) {
      expect(rerun[i].id).toBe(records[i].id);
      expect(rerun[i].vector).toEqual(records[i].vector);
    }
    expect(readFileSync(out2)).toEqual(readFileSync(out1));

    // the downstream pipeline accepts the file as-is
    const store = path.join(dir, 'store.bin');
    const ingest = spawnSync('oscars', ['ingest', '--input', out1, '--output', store], {
      encoding: 'utf8',
      cwd: dir,
    });
    expect(ingest.error, 'oscars CLI not installed on PATH').toBeUndefined();
    expect(ingest.status, ingest.stderr).toBe(0);
    expect(ingest.stdout).toContain('records\t10');

    console.log(
      'extractor contract: PASS (10 records, uniform 512-dim, verified format, ' +
        'byte-identical rerun, downstream ingest ok)',
    );
  }, 300_000);
});

describe('extract behavior', () => {
  it('emits identical vectors for the same image bytes under two ids', () => {
    const dir = tmp();
    const images = path.join(dir, 'images');
    mkdirSync(images);
    copyFileSync(path.join(IMAGES, 'skull_0001.png'), path.join(images, 'first.png'));
    copyFileSync(path.join(IMAGES, 'skull_0001.png'), path.join(images, 'second.png'));
    writeFileSync(path.join(dir, 'labels.csv'), 'first.png,a\nsecond.png,b\n');
    const out = path.join(dir, 'out.jsonl');
    extract({ imageRoot: images, labelSource: path.join(dir, 'labels.csv'), out, log: () => {} });
    const [a, b] = readRecords(out);
    expect(a.vector).toEqual(b.vector);
    expect(a.labels).toEqual(['a']);
    expect(b.labels).toEqual(['b']);
  });

  it('skips an undecodable image with a log line and keeps going', () => {
    const dir = tmp();
    const images = path.join(dir, 'images');
    mkdirSync(images);
    copyFileSync(path.join(IMAGES, 'skull_0001.png'), path.join(images, 'good.png'));
    writeFileSync(path.join(images, 'z_broken.png'), Buffer.from('not really a png'));
    writeFileSync(path.join(dir, 'labels.csv'), 'good.png,a\nz_broken.png,a\n');
    const out = path.join(dir, 'out.jsonl');
    const logged: string[] = [];
    const report = extract({
      imageRoot: images,
      labelSource: path.join(dir, 'labels.csv'),
      out,
      log: (m) => logged.push(m),
    });
    expect(report.written).toBe(1);
    expect(report.skipped).toEqual(['z_broken.png']);
    expect(logged.some((m) => m.includes('skipped (undecodable): z_broken.png'))).toBe(true);
    expect(readRecords(out).map((r) => r.id)).toEqual(['good.png']);
  });

  it('fails fast, naming the file, when an image has no label row', () => {
    const dir = tmp();
    const images = path.join(dir, 'images');
    mkdirSync(images);
    copyFileSync(path.join(IMAGES, 'skull_0001.png'), path.join(images, 'unlabeled.png'));
    writeFileSync(path.join(dir, 'labels.csv'), 'other.png,a\n');
    expect(() =>
      extract({
        imageRoot: images,
        labelSource: path.join(dir, 'labels.csv'),
        out: path.join(dir, 'out.jsonl'),
        log: () => {},
      }),
    ).toThrow(/no label row for image 'unlabeled.png'/);
  });

  it('warns about label rows that match no image', () => {
    const dir = tmp();
    const images = path.join(dir, 'images');
    mkdirSync(images);
    copyFileSync(path.join(IMAGES, 'skull_0001.png'), path.join(images, 'a.png'));
    writeFileSync(path.join(dir, 'labels.csv'), 'a.png,x\nghost.png,y\n');
    const logged: string[] = [];
    extract({
      imageRoot: images,
      labelSource: path.join(dir, 'labels.csv'),
      out: path.join(dir, 'out.jsonl'),
      log: (m) => logged.push(m),
    });
    expect(logged.some((m) => m.includes("label row 'ghost.png' matches no image"))).toBe(true);
  });

  it('output does not depend on the batch size', () => {
    const dir = tmp();
    const images = path.join(dir, 'images');
    mkdirSync(images);
    for (const name of ['a.png', 'b.png', 'c.png']) {
      copyFileSync(path.join(IMAGES, 'skull_0001.png'), path.join(images, name));
    }
    writeFileSync(path.join(dir, 'labels.csv'), 'a.png,x\nb.png,x\nc.png,x\n');
    const out1 = path.join(dir, 'b2.jsonl');
    const out2 = path.join(dir, 'b32.jsonl');
    extract({ imageRoot: images, labelSource: path.join(dir, 'labels.csv'), out: out1, batch: 2, log: () => {} });
    extract({ imageRoot: images, labelSource: path.join(dir, 'labels.csv'), out: out2, batch: 32, log: () => {} });
    expect(readFileSync(out1)).toEqual(readFileSync(out2));
  });

  it('rejects an imageless directory and a bad batch size', () => {
    const dir = tmp();
    const images = path.join(dir, 'images');
    mkdirSync(images);
    writeFileSync(path.join(dir, 'labels.csv'), 'a.png,x\n');
    const cfg = { imageRoot: images, labelSource: path.join(dir, 'labels.csv'), out: path.join(dir, 'o.jsonl') };
    expect(() => extract(cfg)).toThrow(/no images found/);
    expect(() => extract({ ...cfg, batch: 0 })).toThrow(ValidationError);
    expect(() => extract({ ...cfg, batch: 2.5 })).toThrow(/positive integer/);
  });
});
