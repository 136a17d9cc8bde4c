/** Invalid content or configuration: malformed records, missing label rows,
 * bad flag values. Maps to exit code 2 on the command line. */
export class ValidationError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'ValidationError';
  }
}

/** Missing or unreadable inputs: absent files or directories, truncated
 * weight files. Maps to exit code 3 on the command line. */
export class DataError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'DataError';
  }
}
