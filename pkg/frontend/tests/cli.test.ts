import { spawnSync } from 'node:child_process';
import { copyFileSync, mkdirSync, mkdtempSync, existsSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

const HERE = path.dirname(fileURLToPath(import.meta.url));
const CLI = path.join(HERE, '..', 'dist', 'cli.js');
const IMAGES = path.join(HERE, 'fixtures', 'images');

function run(...argv: string[]) {
  return spawnSync('node', [CLI, ...argv], { encoding: 'utf8' });
}

describe('command line', () => {
  it('is built (run npm run build before the tests)', () => {
    expect(existsSync(CLI)).toBe(true);
  });

  it('extracts a directory end to end', () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'cli-'));
    const images = path.join(dir, 'images');
    mkdirSync(images);
    copyFileSync(path.join(IMAGES, 'skull_0001.png'), path.join(images, 'one.png'));
    writeFileSync(path.join(dir, 'labels.csv'), 'one.png,bone\n');
    const out = path.join(dir, 'out.jsonl');
    const res = run('extract', '--images', images, '--labels', path.join(dir, 'labels.csv'), '--out', out);
    expect(res.status, res.stderr).toBe(0);
    expect(res.stdout).toContain('records\t1');
    expect(res.stdout).toContain('dimension\t512');
    expect(res.stdout).toContain('skipped\t0');
    const verify = run('verify', '--input', out);
    expect(verify.status, verify.stderr).toBe(0);
    expect(verify.stdout).toContain('records\t1');
    expect(verify.stdout).toContain('ok');
  }, 120_000);

  it('exits 2 when a required flag is missing', () => {
    const res = run('extract', '--images', 'x');
    expect(res.status).toBe(2);
    expect(res.stderr).toContain('--labels is required');
  });

  it('exits 2 on an unparseable batch size', () => {
    const res = run('extract', '--images', 'x', '--labels', 'y', '--out', 'z', '--batch', 'many');
    expect(res.status).toBe(2);
    expect(res.stderr).toContain('--batch');
  });

  it('exits 2 on unknown flags', () => {
    const res = run('verify', '--nope');
    expect(res.status).toBe(2);
  });

  it('exits 3 when verify points at a missing file', () => {
    const res = run('verify', '--input', '/nonexistent/records.jsonl');
    expect(res.status).toBe(3);
    expect(res.stderr).toContain('no such file');
  });

  it('exits 2 when verify finds invalid content, naming the line', () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'cli-'));
    const bad = path.join(dir, 'bad.jsonl');
    writeFileSync(bad, '{"id":"a","labels":[],"vector":[1]}\n');
    const res = run('verify', '--input', bad);
    expect(res.status).toBe(2);
    expect(res.stderr).toContain("line 1: record 'a': empty label set");
  });

  it('exits 2 with usage on an unknown command', () => {
    const res = run('frobnicate');
    expect(res.status).toBe(2);
    expect(res.stderr).toContain('usage:');
  });

  it('prints usage on --help and exits 0', () => {
    const res = run('--help');
    expect(res.status).toBe(0);
    expect(res.stdout).toContain('extract --images DIR --labels CSV --out FILE [--batch 32]');
  });
});
