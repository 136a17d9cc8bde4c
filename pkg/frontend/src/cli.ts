#!/usr/bin/env node
/** Command-line front end:
 *
 *   oscars-extract extract --images DIR --labels CSV --out FILE [--batch 32]
 *   oscars-extract verify --input FILE
 *
 * Exit codes: 0 success, 2 validation (bad flags, bad content, missing
 * label rows), 3 data (missing files or directories). */

import { parseArgs } from 'node:util';

import { DataError, ValidationError } from './errors.js';
import { DEFAULT_BATCH, extract } from './extract.js';
import { verifyInterchange } from './interchange.js';

function usage(): string {
  return [
    'usage: oscars-extract <command> [options]',
    '',
    'commands:',
    '  extract --images DIR --labels CSV --out FILE [--batch 32] [--backbone NAME] [--weights FILE]',
    '  verify  --input FILE',
  ].join('\n');
}

function runExtract(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: {
      images: { type: 'string' },
      labels: { type: 'string' },
      out: { type: 'string' },
      batch: { type: 'string' },
      backbone: { type: 'string' },
      weights: { type: 'string' },
    },
  });
  for (const key of ['images', 'labels', 'out'] as const) {
    if (!values[key]) {
      throw new ValidationError(`extract: --${key} is required`);
    }
  }
  const batch = values.batch === undefined ? DEFAULT_BATCH : Number(values.batch);
  if (!Number.isInteger(batch) || batch < 1) {
    throw new ValidationError(`extract: --batch must be a positive integer, got '${values.batch}'`);
  }
  const report = extract({
    imageRoot: values.images as string,
    labelSource: values.labels as string,
    out: values.out as string,
    batch,
    backbone: values.backbone,
    weightsPath: values.weights,
  });
  process.stdout.write(`records\t${report.written}\n`);
  process.stdout.write(`dimension\t${report.dimension}\n`);
  process.stdout.write(`skipped\t${report.skipped.length}\n`);
  process.stdout.write(`out\t${values.out}\n`);
}

function runVerify(argv: string[]): void {
  const { values } = parseArgs({
    args: argv,
    options: { input: { type: 'string' } },
  });
  if (!values.input) {
    throw new ValidationError('verify: --input is required');
  }
  const report = verifyInterchange(values.input);
  process.stdout.write(`records\t${report.records}\n`);
  process.stdout.write(`dimension\t${report.dimension}\n`);
  process.stdout.write('ok\n');
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === 'extract') {
      runExtract(rest);
    } else if (command === 'verify') {
      runVerify(rest);
    } else if (command === '--help' || command === '-h') {
      process.stdout.write(usage() + '\n');
    } else {
      process.stderr.write(usage() + '\n');
      return 2;
    }
  } catch (exc) {
    if (exc instanceof ValidationError) {
      process.stderr.write(`error: ${exc.message}\n`);
      return 2;
    }
    if (exc instanceof DataError) {
      process.stderr.write(`error: ${exc.message}\n`);
      return 3;
    }
    // parseArgs rejections (unknown flags, missing values) are usage errors
    if (exc instanceof TypeError && 'code' in exc && String(exc.code).startsWith('ERR_PARSE_ARGS')) {
      process.stderr.write(`error: ${exc.message}\n`);
      return 2;
    }
    throw exc;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
