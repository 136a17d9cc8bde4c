/** Image discovery and decoding. PNG and JPEG inputs decode to interleaved
 * RGB floats in [0, 1]; both decoders hand back RGBA, so grayscale sources
 * arrive with the gray value replicated across the three color channels and
 * the alpha channel is dropped. */

import { readdirSync, readFileSync, statSync } from 'node:fs';
import * as path from 'node:path';

import jpeg from 'jpeg-js';
import { PNG } from 'pngjs';

import { DataError } from './errors.js';

export interface DecodedImage {
  width: number;
  height: number;
  /** Interleaved RGB, length width * height * 3, values in [0, 1]. */
  rgb: Float32Array;
}

const IMAGE_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg']);

export function isImagePath(p: string): boolean {
  return IMAGE_EXTENSIONS.has(path.extname(p).toLowerCase());
}

/** All image files under root, as forward-slash relative paths in sorted
 * order. The sorted order is the pipeline's input order. */
export function listImages(root: string): string[] {
  let stat;
  try {
    stat = statSync(root);
  } catch {
    throw new DataError(`no such directory: ${root}`);
  }
  if (!stat.isDirectory()) {
    throw new DataError(`not a directory: ${root}`);
  }
  const entries = readdirSync(root, { recursive: true, encoding: 'utf8' });
  return entries
    .map((p) => p.split(path.sep).join('/'))
    .filter((p) => isImagePath(p) && statSync(path.join(root, p)).isFile())
    .sort();
}

function rgbaToRgb(rgba: Uint8Array, width: number, height: number): DecodedImage {
  const n = width * height;
  const rgb = new Float32Array(n * 3);
  for (let i = 0; i < n; i++) {
    rgb[i * 3] = rgba[i * 4] / 255;
    rgb[i * 3 + 1] = rgba[i * 4 + 1] / 255;
    rgb[i * 3 + 2] = rgba[i * 4 + 2] / 255;
  }
  return { width, height, rgb };
}

/** Decode one image file. Throws on unreadable or corrupt input; the caller
 * decides whether that is fatal or a logged skip. */
export function decodeImage(filePath: string): DecodedImage {
  const ext = path.extname(filePath).toLowerCase();
  const buf = readFileSync(filePath);
  if (ext === '.png') {
    const png = PNG.sync.read(buf);
    return rgbaToRgb(png.data, png.width, png.height);
  }
  if (ext === '.jpg' || ext === '.jpeg') {
    const img = jpeg.decode(buf, { useTArray: true, formatAsRGBA: true, maxMemoryUsageInMB: 512 });
    return rgbaToRgb(img.data, img.width, img.height);
  }
  throw new DataError(`unsupported image type: ${filePath}`);
}
