export { DataError, ValidationError } from './errors.js';
export { DecodedImage, decodeImage, isImagePath, listImages } from './images.js';
export {
  InterchangeRecord,
  VerifyReport,
  recordToLine,
  verifyInterchange,
  writeInterchange,
} from './interchange.js';
export { LabelTable, loadLabelCsv, parseLabelCsv } from './labels.js';
export { PRETRAIN_MEAN, PRETRAIN_STD, resizeBilinear, toBackboneInput } from './preprocess.js';
export { DEFAULT_SEED, FEATURE_DIM, INPUT_SIZE, Resnet18 } from './resnet.js';
export {
  DEFAULT_BATCH,
  ExtractReport,
  ExtractionConfig,
  buildBackbone,
  extract,
} from './extract.js';
export { main as cliMain } from './cli.js';
