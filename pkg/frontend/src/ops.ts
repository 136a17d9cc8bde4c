/** Dense CPU kernels for the backbone: channel-major (CHW) tensors backed by
 * Float32Array, convolution as im2col plus an unrolled GEMM, inference-mode
 * batch normalization folded to a per-channel scale and shift. */

export interface Tensor {
  data: Float32Array;
  c: number;
  h: number;
  w: number;
}

export function tensor(c: number, h: number, w: number): Tensor {
  return { data: new Float32Array(c * h * w), c, h, w };
}

export interface ConvSpec {
  outChannels: number;
  inChannels: number;
  kernel: number;
  stride: number;
  pad: number;
}

export function convOutputSize(size: number, kernel: number, stride: number, pad: number): number {
  return Math.floor((size + 2 * pad - kernel) / stride) + 1;
}

/** Unpack convolution patches: rows are (inChannel, kh, kw) triples, columns
 * are output positions; out-of-bounds taps stay zero. */
function im2col(input: Tensor, spec: ConvSpec, oh: number, ow: number): Float32Array {
  const { inChannels, kernel, stride, pad } = spec;
  const n = oh * ow;
  const cols = new Float32Array(inChannels * kernel * kernel * n);
  const { data, h, w } = input;
  let row = 0;
  for (let ic = 0; ic < inChannels; ic++) {
    const base = ic * h * w;
    for (let kh = 0; kh < kernel; kh++) {
      for (let kw = 0; kw < kernel; kw++) {
        const out = row * n;
        for (let oy = 0; oy < oh; oy++) {
          const iy = oy * stride + kh - pad;
          if (iy < 0 || iy >= h) continue;
          const srcRow = base + iy * w;
          const dstRow = out + oy * ow;
          for (let ox = 0; ox < ow; ox++) {
            const ix = ox * stride + kw - pad;
            if (ix >= 0 && ix < w) cols[dstRow + ox] = data[srcRow + ix];
          }
        }
        row++;
      }
    }
  }
  return cols;
}

/** C[M,N] += A[M,K] * B[K,N], all row-major; K unrolled four wide. */
function gemm(m: number, k: number, n: number, a: Float32Array, b: Float32Array, c: Float32Array): void {
  for (let i = 0; i < m; i++) {
    const cOff = i * n;
    const aOff = i * k;
    let j = 0;
    for (; j + 4 <= k; j += 4) {
      const a0 = a[aOff + j];
      const a1 = a[aOff + j + 1];
      const a2 = a[aOff + j + 2];
      const a3 = a[aOff + j + 3];
      if (a0 === 0 && a1 === 0 && a2 === 0 && a3 === 0) continue;
      const b0 = j * n;
      const b1 = b0 + n;
      const b2 = b1 + n;
      const b3 = b2 + n;
      for (let p = 0; p < n; p++) {
        c[cOff + p] += a0 * b[b0 + p] + a1 * b[b1 + p] + a2 * b[b2 + p] + a3 * b[b3 + p];
      }
    }
    for (; j < k; j++) {
      const av = a[aOff + j];
      if (av === 0) continue;
      const bOff = j * n;
      for (let p = 0; p < n; p++) c[cOff + p] += av * b[bOff + p];
    }
  }
}

/** 2-D convolution, no bias (the following batch norm supplies the shift). */
export function conv2d(input: Tensor, weight: Float32Array, spec: ConvSpec): Tensor {
  if (input.c !== spec.inChannels) {
    throw new Error(`conv2d: expected ${spec.inChannels} input channels, got ${input.c}`);
  }
  const oh = convOutputSize(input.h, spec.kernel, spec.stride, spec.pad);
  const ow = convOutputSize(input.w, spec.kernel, spec.stride, spec.pad);
  const k = spec.inChannels * spec.kernel * spec.kernel;
  const cols = im2col(input, spec, oh, ow);
  const out = tensor(spec.outChannels, oh, ow);
  gemm(spec.outChannels, k, oh * ow, weight, cols, out.data);
  return out;
}

export interface BatchNormParams {
  gamma: Float32Array;
  beta: Float32Array;
  mean: Float32Array;
  variance: Float32Array;
}

export const BN_EPS = 1e-5;

/** In-place inference-mode batch norm: x -> gamma * (x - mean) / sqrt(var + eps) + beta. */
export function batchNorm(x: Tensor, params: BatchNormParams): void {
  const plane = x.h * x.w;
  for (let c = 0; c < x.c; c++) {
    const scale = params.gamma[c] / Math.sqrt(params.variance[c] + BN_EPS);
    const shift = params.beta[c] - params.mean[c] * scale;
    const off = c * plane;
    for (let i = 0; i < plane; i++) {
      x.data[off + i] = x.data[off + i] * scale + shift;
    }
  }
}

export function reluInPlace(x: Tensor): void {
  const d = x.data;
  for (let i = 0; i < d.length; i++) if (d[i] < 0) d[i] = 0;
}

export function addInPlace(x: Tensor, y: Tensor): void {
  if (x.data.length !== y.data.length) {
    throw new Error(`addInPlace: shape mismatch (${x.data.length} vs ${y.data.length})`);
  }
  for (let i = 0; i < x.data.length; i++) x.data[i] += y.data[i];
}

export function maxPool2d(input: Tensor, kernel: number, stride: number, pad: number): Tensor {
  const oh = convOutputSize(input.h, kernel, stride, pad);
  const ow = convOutputSize(input.w, kernel, stride, pad);
  const out = tensor(input.c, oh, ow);
  const plane = input.h * input.w;
  for (let c = 0; c < input.c; c++) {
    const src = c * plane;
    const dst = c * oh * ow;
    for (let oy = 0; oy < oh; oy++) {
      for (let ox = 0; ox < ow; ox++) {
        let best = -Infinity;
        for (let kh = 0; kh < kernel; kh++) {
          const iy = oy * stride + kh - pad;
          if (iy < 0 || iy >= input.h) continue;
          for (let kw = 0; kw < kernel; kw++) {
            const ix = ox * stride + kw - pad;
            if (ix < 0 || ix >= input.w) continue;
            const v = input.data[src + iy * input.w + ix];
            if (v > best) best = v;
          }
        }
        out.data[dst + oy * ow + ox] = best;
      }
    }
  }
  return out;
}

/** Mean over the spatial plane per channel. */
export function globalAvgPool(input: Tensor): Float32Array {
  const plane = input.h * input.w;
  const out = new Float32Array(input.c);
  for (let c = 0; c < input.c; c++) {
    const off = c * plane;
    let sum = 0;
    for (let i = 0; i < plane; i++) sum += input.data[off + i];
    out[c] = sum / plane;
  }
  return out;
}
