import { mkdtempSync, readFileSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import * as path from 'node:path';

import { describe, expect, it } from 'vitest';

import { DataError, ValidationError } from '../src/errors.js';
import { FEATURE_DIM, INPUT_SIZE, Resnet18 } from '../src/resnet.js';
import { Rng } from '../src/rng.js';
import { tensor } from '../src/ops.js';

function syntheticInput(seed: number) {
  const rng = new Rng(seed);
  const t = tensor(3, INPUT_SIZE, INPUT_SIZE);
  for (let i = 0; i < t.data.length; i++) t.data[i] = rng.gaussian() * 0.5;
  return t;
}

describe('Resnet18', () => {
  it('maps 3x224x224 to a finite 512-dim feature vector, deterministically across instances', () => {
    const input = syntheticInput(1);
    const a = Resnet18.seeded().forward(input);
    const b = Resnet18.seeded().forward(input);
    expect(a.length).toBe(FEATURE_DIM);
    for (const v of a) expect(Number.isFinite(v)).toBe(true);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it('different seeds give different networks', () => {
    const input = syntheticInput(2);
    const a = Resnet18.seeded(1).forward(input);
    const b = Resnet18.seeded(2).forward(input);
    expect(Array.from(a)).not.toEqual(Array.from(b));
  });

  it('rejects wrongly shaped input', () => {
    expect(() => Resnet18.seeded().forward(tensor(3, 100, 100))).toThrow(ValidationError);
    expect(() => Resnet18.seeded().forward(tensor(1, INPUT_SIZE, INPUT_SIZE))).toThrow(/expects 3x224x224/);
  });

  it('exposes the full named parameter set of the 18-layer topology', () => {
    const names = Resnet18.seeded().namedTensors().map(([n]) => n);
    // stem + 4 stages x 2 blocks x 2 convs + 3 downsample projections
    const convs = names.filter((n) => n.endsWith('conv.weight') || /conv[12]\.weight$/.test(n));
    expect(convs).toHaveLength(1 + 16 + 3);
    expect(new Set(names).size).toBe(names.length);
    expect(names).toContain('stage2.block1.down.conv.weight');
    expect(names).not.toContain('stage1.block1.down.conv.weight');
  });
});

describe('weight file round trip', () => {
  it('save then load reproduces features exactly', () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'weights-'));
    const file = path.join(dir, 'net.oscw');
    const net = Resnet18.seeded(7);
    net.saveWeights(file);
    const loaded = Resnet18.fromFile(file);
    const input = syntheticInput(3);
    expect(Array.from(loaded.forward(input))).toEqual(Array.from(net.forward(input)));
  });

  it('detects corruption via the checksum', () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'weights-'));
    const file = path.join(dir, 'net.oscw');
    Resnet18.seeded().saveWeights(file);
    const bytes = readFileSync(file);
    bytes[1000] ^= 0xff;
    writeFileSync(file, bytes);
    expect(() => Resnet18.fromFile(file)).toThrow(/checksum mismatch/);
  });

  it('rejects a non-weight file', () => {
    const dir = mkdtempSync(path.join(tmpdir(), 'weights-'));
    const file = path.join(dir, 'net.oscw');
    writeFileSync(file, 'not weights at all, clearly');
    expect(() => Resnet18.fromFile(file)).toThrow(DataError);
  });

  it('raises a data error for a missing file', () => {
    expect(() => Resnet18.fromFile('/nonexistent/net.oscw')).toThrow(/no such file/);
  });
});
