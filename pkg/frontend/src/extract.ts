/** The extraction pipeline: scan an image directory, join against the label
 * table, push every decodable image through the backbone and write one
 * interchange record per image, in directory order. An image that fails to
 * decode is skipped with a log line; an image without a label row is fatal
 * before any feature work starts. */

import * as path from 'node:path';

import { ValidationError } from './errors.js';
import { decodeImage, listImages } from './images.js';
import { InterchangeRecord, writeInterchange } from './interchange.js';
import { loadLabelCsv } from './labels.js';
import { toBackboneInput } from './preprocess.js';
import { Resnet18 } from './resnet.js';

export interface ExtractionConfig {
  /** Directory scanned recursively for .png/.jpg/.jpeg files. */
  imageRoot: string;
  /** CSV with `path,labels` columns; labels are `;`-separated. */
  labelSource: string;
  /** Output interchange file (JSON lines). */
  out: string;
  /** Images decoded and embedded per chunk. */
  batch?: number;
  /** Backbone selector: 'resnet18-seeded' or 'resnet18-file'. */
  backbone?: string;
  /** Weight file for the 'resnet18-file' backbone. */
  weightsPath?: string;
  /** Informational; only 'cpu' is implemented. */
  device?: string;
  /** Skip/progress log sink; defaults to stderr. */
  log?: (message: string) => void;
}

export interface ExtractReport {
  written: number;
  dimension: number;
  skipped: string[];
}

export const DEFAULT_BATCH = 32;

export function buildBackbone(config: ExtractionConfig): Resnet18 {
  const kind = config.backbone ?? 'resnet18-seeded';
  if (kind === 'resnet18-seeded') {
    return Resnet18.seeded();
  }
  if (kind === 'resnet18-file') {
    if (!config.weightsPath) {
      throw new ValidationError("backbone 'resnet18-file' requires weightsPath");
    }
    return Resnet18.fromFile(config.weightsPath);
  }
  throw new ValidationError(`unknown backbone '${kind}'`);
}

export function extract(config: ExtractionConfig): ExtractReport {
  const batch = config.batch ?? DEFAULT_BATCH;
  if (!Number.isInteger(batch) || batch < 1) {
    throw new ValidationError(`batch must be a positive integer, got ${batch}`);
  }
  if ((config.device ?? 'cpu') !== 'cpu') {
    throw new ValidationError(`unknown device '${config.device}'`);
  }
  const log = config.log ?? ((message: string) => process.stderr.write(message + '\n'));

  const ids = listImages(config.imageRoot);
  if (ids.length === 0) {
    throw new ValidationError(`no images found under ${config.imageRoot}`);
  }
  const labels = loadLabelCsv(config.labelSource);
  for (const id of ids) {
    if (!labels.has(id)) {
      throw new ValidationError(`no label row for image '${id}' in ${config.labelSource}`);
    }
  }
  for (const key of labels.keys()) {
    if (!ids.includes(key)) {
      log(`warning: label row '${key}' matches no image`);
    }
  }

  const net = buildBackbone(config);
  const records: InterchangeRecord[] = [];
  const skipped: string[] = [];
  let dimension = 0;
  for (let start = 0; start < ids.length; start += batch) {
    for (const id of ids.slice(start, start + batch)) {
      let input;
      try {
        input = toBackboneInput(decodeImage(path.join(config.imageRoot, id)));
      } catch (exc) {
        skipped.push(id);
        log(`skipped (undecodable): ${id} (${(exc as Error).message})`);
        continue;
      }
      const features = net.forward(input);
      dimension = features.length;
      records.push({ id, labels: labels.get(id) as string[], vector: Array.from(features) });
    }
  }
  if (records.length === 0) {
    throw new ValidationError('every image failed to decode; nothing to write');
  }
  writeInterchange(config.out, records);
  return { written: records.length, dimension, skipped };
}
