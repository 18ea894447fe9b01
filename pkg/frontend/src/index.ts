/** Read-only access to generated corpora: shard decoding, manifest
 * validation, record streaming, and embedding-database loading. */

export {
  ReaderError,
  FormatError,
  UnsupportedVersionError,
  SchemaError,
  ValidationError,
} from "./errors.js";
export {
  SHARD_MAGIC,
  FORMAT_VERSION,
  DOMAIN_NAMES,
  verifyShardHeader,
  iterShardRecords,
} from "./shard.js";
export type {
  DtypeName,
  NdArray,
  ShardRecord,
  ArraySelection,
} from "./shard.js";
export {
  MANIFEST_NAME,
  SCHEMA_VERSION,
  openCorpus,
  iterRecords,
} from "./corpus.js";
export type {
  ShardEntry,
  Manifest,
  ReaderSession,
  RecordView,
} from "./corpus.js";
export { canonicalMemberJson } from "./canonical.js";
export { DB_MAGIC, DB_VERSION, openEmbeddingDb } from "./embedding.js";
export type { EmbeddingDb } from "./embedding.js";
