/** Streaming decoder for corpus shard files.
 *
 * Shard layout (all integers little-endian):
 *
 *     bytes 0-3  magic "SGNC"
 *     bytes 4-5  u16 format version (currently 1)
 *     then, per record, a u32 body length followed by the body:
 *         u64 record id
 *         u8  domain code (epi=1, eco-butterfly=2, eco-lynxhare=3,
 *             chem=4, cascade=5)
 *         u32 blob length, then canonical-JSON UTF-8 parameter blob
 *         u16 array count, then per array (sorted by name):
 *             u8 name length + ASCII name
 *             u8 dtype code (f32=1, f64=2, i32=3, i64=4, u8=5)
 *             u8 ndim, then ndim x u32 dims
 *             u64 payload byte length + raw little-endian payload
 *
 * Records are read one at a time through a file descriptor, so memory
 * stays bounded by the largest single record regardless of shard size.
 */

import * as fs from "node:fs";

import { FormatError, UnsupportedVersionError } from "./errors.js";

export const SHARD_MAGIC = "SGNC";
export const FORMAT_VERSION = 1;

export const DOMAIN_NAMES: ReadonlyMap<number, string> = new Map([
  [1, "epi"],
  [2, "eco-butterfly"],
  [3, "eco-lynxhare"],
  [4, "chem"],
  [5, "cascade"],
]);

export type DtypeName = "f32" | "f64" | "i32" | "i64" | "u8";

export type TypedArrayValue =
  | Float32Array
  | Float64Array
  | Int32Array
  | BigInt64Array
  | Uint8Array;

interface DtypeSpec {
  name: DtypeName;
  itemBytes: number;
  fromBytes: (bytes: Uint8Array) => TypedArrayValue;
}

function copyAligned(bytes: Uint8Array): ArrayBuffer {
  const copy = new Uint8Array(bytes.length);
  copy.set(bytes);
  return copy.buffer;
}

const LITTLE_ENDIAN_PLATFORM =
  new Uint8Array(new Uint16Array([1]).buffer)[0] === 1;

function swapped(bytes: Uint8Array, itemBytes: number): ArrayBuffer {
  const copy = new Uint8Array(bytes.length);
  for (let start = 0; start < bytes.length; start += itemBytes) {
    for (let k = 0; k < itemBytes; k += 1) {
      copy[start + k] = bytes[start + itemBytes - 1 - k]!;
    }
  }
  return copy.buffer;
}

function numericBuffer(bytes: Uint8Array, itemBytes: number): ArrayBuffer {
  return LITTLE_ENDIAN_PLATFORM
    ? copyAligned(bytes)
    : swapped(bytes, itemBytes);
}

const DTYPES: ReadonlyMap<number, DtypeSpec> = new Map<number, DtypeSpec>([
  [1, { name: "f32", itemBytes: 4,
        fromBytes: (b) => new Float32Array(numericBuffer(b, 4)) }],
  [2, { name: "f64", itemBytes: 8,
        fromBytes: (b) => new Float64Array(numericBuffer(b, 8)) }],
  [3, { name: "i32", itemBytes: 4,
        fromBytes: (b) => new Int32Array(numericBuffer(b, 4)) }],
  [4, { name: "i64", itemBytes: 8,
        fromBytes: (b) => new BigInt64Array(numericBuffer(b, 8)) }],
  [5, { name: "u8", itemBytes: 1,
        fromBytes: (b) => new Uint8Array(copyAligned(b)) }],
]);

/** One decoded array: flat row-major data plus its declared dims. */
export interface NdArray {
  dtype: DtypeName;
  dims: number[];
  data: TypedArrayValue;
}

/** One decoded record. `arrayNames` lists every array stored in the
 * record; `arrays` holds only the ones the read mode decoded. */
export interface ShardRecord {
  recordId: number;
  domain: string;
  blob: Record<string, unknown>;
  arrays: Map<string, NdArray>;
  arrayNames: string[];
}

/** Which array payloads to materialize while streaming. "none" reads
 * only the id/domain/blob head and never touches payload bytes. */
export type ArraySelection = "all" | "none" | ReadonlySet<string>;

class Cursor {
  private view: DataView;

  constructor(
    private readonly buf: Uint8Array,
    private readonly path: string,
    public offset = 0,
  ) {
    this.view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  }

  private need(n: number): void {
    if (this.offset + n > this.buf.byteLength) {
      throw new FormatError(
        `${this.path}: truncated record body at byte ${this.offset} ` +
        `(needed ${n} more bytes)`);
    }
  }

  u8(): number {
    this.need(1);
    const v = this.view.getUint8(this.offset);
    this.offset += 1;
    return v;
  }

  u16(): number {
    this.need(2);
    const v = this.view.getUint16(this.offset, true);
    this.offset += 2;
    return v;
  }

  u32(): number {
    this.need(4);
    const v = this.view.getUint32(this.offset, true);
    this.offset += 4;
    return v;
  }

  u64(): number {
    this.need(8);
    const v = this.view.getBigUint64(this.offset, true);
    this.offset += 8;
    if (v > BigInt(Number.MAX_SAFE_INTEGER)) {
      throw new FormatError(`${this.path}: 64-bit field ${v} exceeds the ` +
        `safe integer range`);
    }
    return Number(v);
  }

  bytes(n: number): Uint8Array {
    this.need(n);
    const v = this.buf.subarray(this.offset, this.offset + n);
    this.offset += n;
    return v;
  }
}

const utf8 = new TextDecoder("utf-8", { fatal: true });

function parseBlob(bytes: Uint8Array, path: string): Record<string, unknown> {
  let parsed: unknown;
  try {
    parsed = JSON.parse(utf8.decode(bytes));
  } catch (err) {
    throw new FormatError(
      `${path}: parameter blob is not valid JSON (${(err as Error).message})`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new FormatError(`${path}: parameter blob is not a JSON object`);
  }
  return parsed as Record<string, unknown>;
}

function decodeHead(cursor: Cursor, path: string):
    { recordId: number; domain: string; blob: Record<string, unknown> } {
  const recordId = cursor.u64();
  const code = cursor.u8();
  const domain = DOMAIN_NAMES.get(code);
  if (domain === undefined) {
    throw new FormatError(`${path}: unknown domain code ${code}`);
  }
  const blob = parseBlob(cursor.bytes(cursor.u32()), path);
  return { recordId, domain, blob };
}

/** Decode one record body. `select` limits which array payloads are
 * materialized; names and dims are always walked so the body length can
 * be verified. */
export function decodeRecordBody(
  body: Uint8Array, path: string, select: ArraySelection = "all",
): ShardRecord {
  const cursor = new Cursor(body, path);
  const head = decodeHead(cursor, path);
  const arrayCount = cursor.u16();
  const arrays = new Map<string, NdArray>();
  const arrayNames: string[] = [];
  for (let i = 0; i < arrayCount; i += 1) {
    const name = utf8.decode(cursor.bytes(cursor.u8()));
    const dtypeCode = cursor.u8();
    const dtype = DTYPES.get(dtypeCode);
    if (dtype === undefined) {
      throw new FormatError(
        `${path}: array ${name} has unknown dtype code ${dtypeCode}`);
    }
    const ndim = cursor.u8();
    const dims: number[] = [];
    for (let d = 0; d < ndim; d += 1) dims.push(cursor.u32());
    const payloadBytes = cursor.u64();
    const elements = dims.reduce((a, b) => a * b, 1);
    if (payloadBytes !== elements * dtype.itemBytes) {
      throw new FormatError(
        `${path}: array ${name} declares dims [${dims}] (${elements} x ` +
        `${dtype.itemBytes} bytes) but carries ${payloadBytes} payload bytes`);
    }
    const payload = cursor.bytes(payloadBytes);
    arrayNames.push(name);
    const wanted = select === "all" ||
      (select !== "none" && select.has(name));
    if (wanted) {
      arrays.set(name, { dtype: dtype.name, dims, data: dtype.fromBytes(payload) });
    }
  }
  if (cursor.offset !== body.byteLength) {
    throw new FormatError(
      `${path}: record body has ${body.byteLength - cursor.offset} ` +
      `trailing bytes`);
  }
  return { ...head, arrays, arrayNames };
}

function readExact(
  fd: number, path: string, position: number, length: number,
): Buffer {
  const buf = Buffer.allocUnsafe(length);
  let got = 0;
  while (got < length) {
    const n = fs.readSync(fd, buf, got, length - got, position + got);
    if (n === 0) {
      throw new FormatError(
        `${path}: truncated at byte ${position + got} ` +
        `(needed ${length - got} more bytes)`);
    }
    got += n;
  }
  return buf;
}

function checkHeader(fd: number, path: string): void {
  const head = readExact(fd, path, 0, 6);
  if (head.toString("latin1", 0, 4) !== SHARD_MAGIC) {
    throw new FormatError(`${path}: bad magic, not a corpus shard`);
  }
  const version = head.readUInt16LE(4);
  if (version !== FORMAT_VERSION) {
    throw new UnsupportedVersionError(
      `${path}: unsupported format version ${version} ` +
      `(this reader implements version ${FORMAT_VERSION})`);
  }
}

/** Open a shard just far enough to validate its magic and version. */
export function verifyShardHeader(path: string): void {
  const fd = fs.openSync(path, "r");
  try {
    checkHeader(fd, path);
  } finally {
    fs.closeSync(fd);
  }
}

/** Stream a shard's records in file order.
 *
 * With `select: "none"` only each record's head (id, domain, blob) is
 * read; array payload bytes are skipped without any I/O on them, and
 * the yielded records carry empty `arrays`/`arrayNames`.
 */
export function* iterShardRecords(
  path: string, select: ArraySelection = "all",
): Generator<ShardRecord> {
  const fd = fs.openSync(path, "r");
  try {
    checkHeader(fd, path);
    const size = fs.fstatSync(fd).size;
    let position = 6;
    while (position < size) {
      const bodyLength = readExact(fd, path, position, 4).readUInt32LE(0);
      position += 4;
      if (position + bodyLength > size) {
        throw new FormatError(
          `${path}: truncated at byte ${size} (record body wants ` +
          `${position + bodyLength - size} more bytes)`);
      }
      if (select === "none") {
        // Head = u64 id + u8 domain + u32 blob length, then the blob.
        if (bodyLength < 13) {
          throw new FormatError(
            `${path}: record body of ${bodyLength} bytes is too short ` +
            `for the fixed head`);
        }
        const blobLength = readExact(fd, path, position, 13).readUInt32LE(9);
        const body = readExact(fd, path, position,
                               Math.min(13 + blobLength, bodyLength));
        const decoded = decodeHead(new Cursor(body, path), path);
        yield { ...decoded, arrays: new Map(), arrayNames: [] };
      } else {
        yield decodeRecordBody(readExact(fd, path, position, bodyLength),
                               path, select);
      }
      position += bodyLength;
    }
  } finally {
    fs.closeSync(fd);
  }
}
