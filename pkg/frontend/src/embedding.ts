/** Reader for persisted embedding databases.
 *
 * File layout (all integers little-endian):
 *
 *     magic "SGED", u16 version (1), u32 dim, u64 count
 *     u32 manifest-hash byte length + UTF-8 manifest hash
 *     count x dim float32 rows, row-major, byte-verbatim
 *     count index entries: u64 id, u64 blob offset, u32 blob length
 *     concatenated JSON parameter blobs
 */

import * as fs from "node:fs";

import { FormatError, UnsupportedVersionError, ValidationError } from "./errors.js";

export const DB_MAGIC = "SGED";
export const DB_VERSION = 1;

const HEADER_BYTES = 18;       // magic + u16 version + u32 dim + u64 count
const INDEX_ENTRY_BYTES = 20;  // u64 id + u64 offset + u32 length

/** A loaded embedding database. `embeddings` is the verbatim row-major
 * float32 matrix; `row(i)` and `embeddingOf(id)` return views into it. */
export interface EmbeddingDb {
  dim: number;
  count: number;
  manifestHash: string;
  ids: number[];
  embeddings: Float32Array;
  params: Map<number, unknown>;
  row(index: number): Float32Array;
  embeddingOf(id: number): Float32Array;
}

function safeNumber(value: bigint, what: string, path: string): number {
  if (value > BigInt(Number.MAX_SAFE_INTEGER)) {
    throw new FormatError(`${path}: ${what} ${value} exceeds the safe ` +
      `integer range`);
  }
  return Number(value);
}

/** Read and validate a database file; blobs are parsed eagerly so a
 * corrupt file fails at open rather than mid-query. */
export function openEmbeddingDb(path: string): EmbeddingDb {
  const data = fs.readFileSync(path);
  if (data.byteLength < HEADER_BYTES ||
      data.toString("latin1", 0, 4) !== DB_MAGIC) {
    throw new FormatError(`${path}: not an embedding database (bad magic)`);
  }
  const version = data.readUInt16LE(4);
  if (version !== DB_VERSION) {
    throw new UnsupportedVersionError(
      `${path}: unsupported version ${version} (this reader implements ` +
      `version ${DB_VERSION})`);
  }
  const dim = data.readUInt32LE(6);
  const count = safeNumber(data.readBigUInt64LE(10), "entry count", path);

  let cursor = HEADER_BYTES;
  if (cursor + 4 > data.byteLength) {
    throw new FormatError(`${path}: truncated at byte ${data.byteLength}`);
  }
  const hashLength = data.readUInt32LE(cursor);
  cursor += 4;
  const matrixBytes = count * dim * 4;
  const indexBytes = count * INDEX_ENTRY_BYTES;
  if (cursor + hashLength + matrixBytes + indexBytes > data.byteLength) {
    throw new FormatError(`${path}: truncated at byte ${data.byteLength}`);
  }
  const manifestHash = data.toString("utf-8", cursor, cursor + hashLength);
  cursor += hashLength;

  const matrixCopy = new Uint8Array(matrixBytes);
  matrixCopy.set(data.subarray(cursor, cursor + matrixBytes));
  const embeddings = new Float32Array(matrixCopy.buffer);
  cursor += matrixBytes;

  const ids: number[] = [];
  const params = new Map<number, unknown>();
  const blobStart = cursor + indexBytes;
  for (let i = 0; i < count; i += 1) {
    const entry = cursor + i * INDEX_ENTRY_BYTES;
    const id = safeNumber(data.readBigUInt64LE(entry), "record id", path);
    const offset = safeNumber(data.readBigUInt64LE(entry + 8),
                              "blob offset", path);
    const length = data.readUInt32LE(entry + 16);
    const begin = blobStart + offset;
    if (begin + length > data.byteLength) {
      throw new FormatError(
        `${path}: parameter blob truncated at byte ${data.byteLength}`);
    }
    if (params.has(id)) {
      throw new ValidationError(`${path}: duplicate record id ${id}`);
    }
    ids.push(id);
    try {
      params.set(id, JSON.parse(data.toString("utf-8", begin, begin + length)));
    } catch (err) {
      throw new FormatError(
        `${path}: parameter blob for id ${id} is not valid JSON ` +
        `(${(err as Error).message})`);
    }
  }

  const rowOf = new Map(ids.map((id, i) => [id, i]));
  const row = (index: number): Float32Array => {
    if (!(index >= 0 && index < count)) {
      throw new RangeError(`row index ${index} outside [0, ${count})`);
    }
    return embeddings.subarray(index * dim, (index + 1) * dim);
  };
  return {
    dim, count, manifestHash, ids, embeddings, params, row,
    embeddingOf(id: number): Float32Array {
      const index = rowOf.get(id);
      if (index === undefined) {
        throw new ValidationError(`id ${id} is not in the database`);
      }
      return row(index);
    },
  };
}
