/** Error hierarchy mirroring the failure classes of the corpus format. */

/** Base class for everything this package raises on purpose. */
export class ReaderError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** Bytes that do not decode as the format claims (bad magic, truncation). */
export class FormatError extends ReaderError {}

/** A format or schema version this reader does not implement. */
export class UnsupportedVersionError extends FormatError {}

/** Structurally valid bytes whose content breaks the declared schema. */
export class SchemaError extends ReaderError {}

/** Content that decodes but contradicts the manifest or its invariants. */
export class ValidationError extends ReaderError {}
