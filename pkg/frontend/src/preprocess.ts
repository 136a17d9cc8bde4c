/** Resize-and-normalize: every image becomes a 3 x 224 x 224 channel-major
 * tensor, bilinearly resampled and standardized with the channel statistics
 * the backbone was pretrained with. */

import { DecodedImage } from './images.js';
import { INPUT_SIZE } from './resnet.js';
import { Tensor, tensor } from './ops.js';

/** Channel mean/std of the backbone's natural-image pretraining corpus. */
export const PRETRAIN_MEAN = [0.485, 0.456, 0.406] as const;
export const PRETRAIN_STD = [0.229, 0.224, 0.225] as const;

/** Bilinear resample with half-pixel centers. */
export function resizeBilinear(img: DecodedImage, outW: number, outH: number): DecodedImage {
  if (img.width === outW && img.height === outH) {
    return { width: outW, height: outH, rgb: img.rgb.slice() };
  }
  const out = new Float32Array(outW * outH * 3);
  const xScale = img.width / outW;
  const yScale = img.height / outH;
  for (let oy = 0; oy < outH; oy++) {
    const sy = Math.min(Math.max((oy + 0.5) * yScale - 0.5, 0), img.height - 1);
    const y0 = Math.floor(sy);
    const y1 = Math.min(y0 + 1, img.height - 1);
    const fy = sy - y0;
    for (let ox = 0; ox < outW; ox++) {
      const sx = Math.min(Math.max((ox + 0.5) * xScale - 0.5, 0), img.width - 1);
      const x0 = Math.floor(sx);
      const x1 = Math.min(x0 + 1, img.width - 1);
      const fx = sx - x0;
      const w00 = (1 - fy) * (1 - fx);
      const w01 = (1 - fy) * fx;
      const w10 = fy * (1 - fx);
      const w11 = fy * fx;
      const p00 = (y0 * img.width + x0) * 3;
      const p01 = (y0 * img.width + x1) * 3;
      const p10 = (y1 * img.width + x0) * 3;
      const p11 = (y1 * img.width + x1) * 3;
      const dst = (oy * outW + ox) * 3;
      for (let c = 0; c < 3; c++) {
        out[dst + c] =
          w00 * img.rgb[p00 + c] +
          w01 * img.rgb[p01 + c] +
          w10 * img.rgb[p10 + c] +
          w11 * img.rgb[p11 + c];
      }
    }
  }
  return { width: outW, height: outH, rgb: out };
}

/** Interleaved [0,1] RGB -> standardized channel-major backbone input. */
export function toBackboneInput(img: DecodedImage): Tensor {
  const resized = resizeBilinear(img, INPUT_SIZE, INPUT_SIZE);
  const out = tensor(3, INPUT_SIZE, INPUT_SIZE);
  const plane = INPUT_SIZE * INPUT_SIZE;
  for (let c = 0; c < 3; c++) {
    const mean = PRETRAIN_MEAN[c];
    const std = PRETRAIN_STD[c];
    const off = c * plane;
    for (let i = 0; i < plane; i++) {
      out.data[off + i] = (resized.rgb[i * 3 + c] - mean) / std;
    }
  }
  return out;
}
