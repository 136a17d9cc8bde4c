/** The 18-layer residual backbone: a 7x7 stem, four stages of two residual
 * blocks each, and a global average pool producing a 512-dim feature vector
 * (the classifier head is removed). Runs in inference mode only — batch norm
 * uses stored statistics and nothing is stochastic, so outputs are exactly
 * reproducible.
 *
 * Weights come from one of two places: `Resnet18.fromFile` reads a weight
 * file exported from a pretrained checkpoint, and `Resnet18.seeded` draws a
 * fixed, fully deterministic initialization. The seeded variant yields
 * features suitable for format and pipeline work, not semantically
 * meaningful ones; load real pretrained weights for that.
 */

import { openSync, readSync, closeSync, writeFileSync, existsSync, fstatSync } from 'node:fs';
import { endianness } from 'node:os';

import { DataError, ValidationError } from './errors.js';
import { Rng } from './rng.js';
import {
  BatchNormParams,
  ConvSpec,
  Tensor,
  addInPlace,
  batchNorm,
  conv2d,
  globalAvgPool,
  maxPool2d,
  reluInPlace,
} from './ops.js';

export const FEATURE_DIM = 512;
export const INPUT_SIZE = 224;
export const DEFAULT_SEED = 0x05ca25;

const WEIGHTS_MAGIC = 'OSCW';
const WEIGHTS_VERSION = 1;

interface ConvLayer {
  spec: ConvSpec;
  weight: Float32Array;
}

interface BlockParams {
  conv1: ConvLayer;
  bn1: BatchNormParams;
  conv2: ConvLayer;
  bn2: BatchNormParams;
  down?: { conv: ConvLayer; bn: BatchNormParams };
}

const STAGE_CHANNELS = [64, 128, 256, 512];

function convLayer(out: number, inp: number, kernel: number, stride: number, pad: number, rng: Rng): ConvLayer {
  const weight = new Float32Array(out * inp * kernel * kernel);
  const std = Math.sqrt(2 / (inp * kernel * kernel));
  for (let i = 0; i < weight.length; i++) weight[i] = rng.gaussian() * std;
  return { spec: { outChannels: out, inChannels: inp, kernel, stride, pad }, weight };
}

function bnIdentity(channels: number): BatchNormParams {
  return {
    gamma: new Float32Array(channels).fill(1),
    beta: new Float32Array(channels),
    mean: new Float32Array(channels),
    variance: new Float32Array(channels).fill(1),
  };
}

export class Resnet18 {
  private constructor(
    private readonly stem: ConvLayer,
    private readonly stemBn: BatchNormParams,
    private readonly stages: BlockParams[][],
  ) {}

  /** Deterministic initialization: He-scaled convolution weights from a
   * seeded generator, batch norms at their identity statistics. */
  static seeded(seed: number = DEFAULT_SEED): Resnet18 {
    const rng = new Rng(seed);
    const stem = convLayer(64, 3, 7, 2, 3, rng);
    const stages: BlockParams[][] = [];
    let inp = 64;
    for (let s = 0; s < STAGE_CHANNELS.length; s++) {
      const out = STAGE_CHANNELS[s];
      const stride = s === 0 ? 1 : 2;
      const blocks: BlockParams[] = [];
      for (let b = 0; b < 2; b++) {
        const blockStride = b === 0 ? stride : 1;
        const blockIn = b === 0 ? inp : out;
        const block: BlockParams = {
          conv1: convLayer(out, blockIn, 3, blockStride, 1, rng),
          bn1: bnIdentity(out),
          conv2: convLayer(out, out, 3, 1, 1, rng),
          bn2: bnIdentity(out),
        };
        if (b === 0 && (blockStride !== 1 || blockIn !== out)) {
          block.down = { conv: convLayer(out, blockIn, 1, blockStride, 0, rng), bn: bnIdentity(out) };
        }
        blocks.push(block);
      }
      stages.push(blocks);
      inp = out;
    }
    return new Resnet18(stem, bnIdentity(64), stages);
  }

  static fromFile(path: string): Resnet18 {
    const net = Resnet18.seeded();
    const tensors = readWeightFile(path);
    for (const [name, expected] of net.namedTensors()) {
      const got = tensors.get(name);
      if (got === undefined) {
        throw new ValidationError(`${path}: missing tensor '${name}'`);
      }
      if (got.length !== expected.length) {
        throw new ValidationError(
          `${path}: tensor '${name}' has ${got.length} values, expected ${expected.length}`,
        );
      }
      expected.set(got);
      tensors.delete(name);
    }
    if (tensors.size > 0) {
      const extra = [...tensors.keys()].sort().slice(0, 3).join(', ');
      throw new ValidationError(`${path}: unknown tensor(s): ${extra}`);
    }
    return net;
  }

  /** 3 x 224 x 224 normalized input -> 512-dim pooled features. */
  forward(input: Tensor): Float32Array {
    if (input.c !== 3 || input.h !== INPUT_SIZE || input.w !== INPUT_SIZE) {
      throw new ValidationError(
        `backbone expects 3x${INPUT_SIZE}x${INPUT_SIZE} input, got ${input.c}x${input.h}x${input.w}`,
      );
    }
    let x = conv2d(input, this.stem.weight, this.stem.spec);
    batchNorm(x, this.stemBn);
    reluInPlace(x);
    x = maxPool2d(x, 3, 2, 1);
    for (const stage of this.stages) {
      for (const block of stage) {
        x = runBlock(x, block);
      }
    }
    return globalAvgPool(x);
  }

  saveWeights(path: string): void {
    writeWeightFile(path, this.namedTensors());
  }

  /** Canonical (name, storage) pairs; storage is live, so setting values
   * mutates the network. Order defines the weight-file layout. */
  namedTensors(): Array<[string, Float32Array]> {
    const out: Array<[string, Float32Array]> = [['stem.conv.weight', this.stem.weight]];
    pushBn(out, 'stem.bn', this.stemBn);
    this.stages.forEach((blocks, s) => {
      blocks.forEach((block, b) => {
        const prefix = `stage${s + 1}.block${b + 1}`;
        out.push([`${prefix}.conv1.weight`, block.conv1.weight]);
        pushBn(out, `${prefix}.bn1`, block.bn1);
        out.push([`${prefix}.conv2.weight`, block.conv2.weight]);
        pushBn(out, `${prefix}.bn2`, block.bn2);
        if (block.down) {
          out.push([`${prefix}.down.conv.weight`, block.down.conv.weight]);
          pushBn(out, `${prefix}.down.bn`, block.down.bn);
        }
      });
    });
    return out;
  }
}

function pushBn(out: Array<[string, Float32Array]>, prefix: string, bn: BatchNormParams): void {
  out.push([`${prefix}.gamma`, bn.gamma]);
  out.push([`${prefix}.beta`, bn.beta]);
  out.push([`${prefix}.mean`, bn.mean]);
  out.push([`${prefix}.variance`, bn.variance]);
}

function runBlock(x: Tensor, block: BlockParams): Tensor {
  let out = conv2d(x, block.conv1.weight, block.conv1.spec);
  batchNorm(out, block.bn1);
  reluInPlace(out);
  out = conv2d(out, block.conv2.weight, block.conv2.spec);
  batchNorm(out, block.bn2);
  let identity = x;
  if (block.down) {
    identity = conv2d(x, block.down.conv.weight, block.down.conv.spec);
    batchNorm(identity, block.down.bn);
  }
  addInPlace(out, identity);
  reluInPlace(out);
  return out;
}

/** Weight file: 'OSCW', u32 version, u32 tensor count, then per tensor a
 * u16 name length, UTF-8 name, u32 element count and f32 little-endian
 * values; a u32 FNV-1a checksum of everything before it closes the file. */
function writeWeightFile(path: string, tensors: Array<[string, Float32Array]>): void {
  const chunks: Buffer[] = [];
  const head = Buffer.alloc(12);
  head.write(WEIGHTS_MAGIC, 0, 'ascii');
  head.writeUInt32LE(WEIGHTS_VERSION, 4);
  head.writeUInt32LE(tensors.length, 8);
  chunks.push(head);
  for (const [name, data] of tensors) {
    const nameBuf = Buffer.from(name, 'utf8');
    const meta = Buffer.alloc(2 + nameBuf.length + 4);
    meta.writeUInt16LE(nameBuf.length, 0);
    nameBuf.copy(meta, 2);
    meta.writeUInt32LE(data.length, 2 + nameBuf.length);
    chunks.push(meta);
    if (endianness() === 'LE') {
      chunks.push(Buffer.from(data.buffer.slice(data.byteOffset, data.byteOffset + data.byteLength)));
    } else {
      const payload = Buffer.alloc(data.length * 4);
      for (let i = 0; i < data.length; i++) payload.writeFloatLE(data[i], i * 4);
      chunks.push(payload);
    }
  }
  const body = Buffer.concat(chunks);
  const trailer = Buffer.alloc(4);
  trailer.writeUInt32LE(fnv1a(body), 0);
  writeFileSync(path, Buffer.concat([body, trailer]));
}

function readWeightFile(path: string): Map<string, Float32Array> {
  if (!existsSync(path)) {
    throw new DataError(`no such file: ${path}`);
  }
  const fd = openSync(path, 'r');
  let buf: Buffer;
  try {
    const size = fstatSync(fd).size;
    buf = Buffer.alloc(size);
    readSync(fd, buf, 0, size, 0);
  } finally {
    closeSync(fd);
  }
  if (buf.length < 16 || buf.toString('ascii', 0, 4) !== WEIGHTS_MAGIC) {
    throw new DataError(`${path}: not a weight file`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== WEIGHTS_VERSION) {
    throw new DataError(`${path}: unsupported weight file version ${version}`);
  }
  const stored = buf.readUInt32LE(buf.length - 4);
  const body = buf.subarray(0, buf.length - 4);
  if (fnv1a(body) !== stored) {
    throw new DataError(`${path}: checksum mismatch`);
  }
  const count = buf.readUInt32LE(8);
  const tensors = new Map<string, Float32Array>();
  let off = 12;
  for (let t = 0; t < count; t++) {
    if (off + 2 > body.length) throw new DataError(`${path}: truncated weight file`);
    const nameLen = body.readUInt16LE(off);
    off += 2;
    const name = body.toString('utf8', off, off + nameLen);
    off += nameLen;
    const n = body.readUInt32LE(off);
    off += 4;
    if (off + n * 4 > body.length) throw new DataError(`${path}: truncated weight file`);
    const data = new Float32Array(n);
    if (endianness() === 'LE') {
      new Uint8Array(data.buffer).set(body.subarray(off, off + n * 4));
    } else {
      for (let i = 0; i < n; i++) data[i] = body.readFloatLE(off + i * 4);
    }
    off += n * 4;
    tensors.set(name, data);
  }
  return tensors;
}

function fnv1a(buf: Buffer): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < buf.length; i++) {
    h ^= buf[i];
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}
