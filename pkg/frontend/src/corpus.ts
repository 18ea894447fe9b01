/** Read-only sessions over corpus directories.
 *
 * A corpus directory holds `manifest.json` plus shard files; the
 * manifest names each shard and its record count in order. Opening a
 * corpus parses the manifest, checks every shard's magic and version,
 * and verifies the stored config digest (a mismatch is surfaced as a
 * warning, not an error, so tampered-but-readable corpora stay
 * inspectable). Iteration then streams records in manifest order with
 * memory bounded by one record.
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

import { canonicalMemberJson } from "./canonical.js";
import { FormatError, SchemaError, UnsupportedVersionError,
         ValidationError } from "./errors.js";
import { ArraySelection, NdArray, ShardRecord,
         iterShardRecords, verifyShardHeader } from "./shard.js";

export const MANIFEST_NAME = "manifest.json";
export const SCHEMA_VERSION = 1;

export interface ShardEntry {
  file: string;
  records: number;
}

export interface Manifest {
  schemaVersion: number;
  domain: string;
  count: number;
  masterSeed: number;
  config: Record<string, unknown>;
  configDigest: string;
  created: string;
  shards: ShardEntry[];
  auxiliary: Record<string, unknown>;
}

/** An opened corpus: parsed manifest, verified shards, any warnings. */
export interface ReaderSession {
  path: string;
  manifest: Manifest;
  warnings: string[];
}

/** One streamed record with the selected fields materialized. */
export interface RecordView {
  recordId: number;
  domain: string;
  arrays: Record<string, NdArray>;
  params: Record<string, unknown>;
}

function r(name: string): string {
  return JSON.stringify(name);
}

function manifestField<T>(
  raw: Record<string, unknown>, name: string, check: (v: unknown) => v is T,
  where: string,
): T {
  const value = raw[name];
  if (!check(value)) {
    throw new SchemaError(`${where}: manifest field ${r(name)} is ` +
      `missing or malformed`);
  }
  return value;
}

const isString = (v: unknown): v is string => typeof v === "string";
const isNumber = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);
const isObject = (v: unknown): v is Record<string, unknown> =>
  typeof v === "object" && v !== null && !Array.isArray(v);
const isArray = (v: unknown): v is unknown[] => Array.isArray(v);

function parseManifest(rawText: string, where: string): Manifest {
  let raw: unknown;
  try {
    raw = JSON.parse(rawText);
  } catch (err) {
    throw new FormatError(
      `${where}: manifest is not valid JSON (${(err as Error).message})`);
  }
  if (!isObject(raw)) {
    throw new FormatError(`${where}: manifest is not a JSON object`);
  }
  const schemaVersion = manifestField(raw, "schema_version", isNumber, where);
  if (schemaVersion !== SCHEMA_VERSION) {
    throw new UnsupportedVersionError(
      `${where}: unsupported manifest schema version ${schemaVersion} ` +
      `(this reader implements version ${SCHEMA_VERSION})`);
  }
  const shardsRaw = manifestField(raw, "shards", isArray, where);
  const shards: ShardEntry[] = shardsRaw.map((entry, i) => {
    if (!isObject(entry) || !isString(entry.file) || !isNumber(entry.records)) {
      throw new SchemaError(
        `${where}: shard entry ${i} is missing file or records`);
    }
    return { file: entry.file, records: entry.records };
  });
  return {
    schemaVersion,
    domain: manifestField(raw, "domain", isString, where),
    count: manifestField(raw, "count", isNumber, where),
    masterSeed: manifestField(raw, "master_seed", isNumber, where),
    config: manifestField(raw, "config", isObject, where),
    configDigest: manifestField(raw, "config_digest", isString, where),
    created: manifestField(raw, "created", isString, where),
    shards,
    auxiliary: isObject(raw.auxiliary) ? raw.auxiliary : {},
  };
}

/** Open a corpus directory: parse the manifest, verify shard headers,
 * and check the config digest (mismatch becomes a warning). */
export function openCorpus(corpusPath: string): ReaderSession {
  const manifestPath = path.join(corpusPath, MANIFEST_NAME);
  if (!fs.existsSync(manifestPath)) {
    throw new FormatError(`${corpusPath}: no ${MANIFEST_NAME} found`);
  }
  const rawText = fs.readFileSync(manifestPath, "utf-8");
  const manifest = parseManifest(rawText, manifestPath);

  const declared = manifest.shards.reduce((a, s) => a + s.records, 0);
  if (declared !== manifest.count) {
    throw new ValidationError(
      `${manifestPath}: shard entries declare ${declared} records but ` +
      `count says ${manifest.count}`);
  }

  const warnings: string[] = [];
  const canonical = canonicalMemberJson(rawText, "config");
  const digest = crypto.createHash("sha256")
    .update(canonical, "utf-8").digest("hex");
  if (digest !== manifest.configDigest) {
    warnings.push(
      `config digest mismatch: manifest says ${manifest.configDigest}, ` +
      `config hashes to ${digest}; the config may have been edited`);
  }

  for (const shard of manifest.shards) {
    verifyShardHeader(path.join(corpusPath, shard.file));
  }
  return { path: corpusPath, manifest, warnings };
}

type SelectorPlan =
  | { kind: "everything" }
  | { kind: "fields"; arrayFields: Set<string>; paramFields: Set<string>;
      selection: ArraySelection };

function peekFirstRecord(session: ReaderSession): ShardRecord | undefined {
  for (const shard of session.manifest.shards) {
    const shardPath = path.join(session.path, shard.file);
    // Empty selection set: array names and dims are walked for the
    // schema, payload bytes are left unmaterialized.
    for (const record of iterShardRecords(shardPath, new Set())) {
      return record;
    }
  }
  return undefined;
}

function planSelector(
  fields: readonly string[], first: ShardRecord,
): SelectorPlan {
  const arrayFields = new Set<string>();
  const paramFields = new Set<string>();
  for (const name of fields) {
    if (first.arrayNames.includes(name)) {
      arrayFields.add(name);
    } else if (name in first.blob) {
      paramFields.add(name);
    } else {
      throw new SchemaError(
        `field ${r(name)} is neither an array nor a parameter of this ` +
        `corpus (arrays: ${first.arrayNames.join(", ")}; parameters: ` +
        `${Object.keys(first.blob).join(", ")})`);
    }
  }
  return { kind: "fields", arrayFields, paramFields,
           selection: arrayFields.size > 0 ? arrayFields : "none" };
}

function toView(
  record: ShardRecord, plan: SelectorPlan, where: string,
): RecordView {
  if (plan.kind === "everything") {
    return { recordId: record.recordId, domain: record.domain,
             arrays: Object.fromEntries(record.arrays),
             params: record.blob };
  }
  const arrays: Record<string, NdArray> = {};
  for (const name of plan.arrayFields) {
    const value = record.arrays.get(name);
    if (value === undefined) {
      throw new SchemaError(
        `${where}: record ${record.recordId} has no array ${r(name)}`);
    }
    arrays[name] = value;
  }
  const params: Record<string, unknown> = {};
  for (const name of plan.paramFields) {
    if (!(name in record.blob)) {
      throw new SchemaError(
        `${where}: record ${record.recordId} has no parameter ${r(name)}`);
    }
    params[name] = record.blob[name];
  }
  return { recordId: record.recordId, domain: record.domain, arrays, params };
}

/** Stream records in manifest order as (arrays, params) views.
 *
 * `fields` selects by name across arrays and parameter-blob keys; an
 * unknown name raises a schema error against the corpus schema (taken
 * from the first record). A parameter-only selection skips array
 * payload reads entirely. Omitting `fields` yields everything.
 */
export function* iterRecords(
  session: ReaderSession, fields?: readonly string[],
): Generator<RecordView> {
  let plan: SelectorPlan;
  if (fields === undefined) {
    plan = { kind: "everything" };
  } else {
    const first = peekFirstRecord(session);
    if (first === undefined) return;
    plan = planSelector(fields, first);
  }
  const selection: ArraySelection =
    plan.kind === "everything" ? "all" : plan.selection;

  let total = 0;
  for (const shard of session.manifest.shards) {
    const shardPath = path.join(session.path, shard.file);
    let inShard = 0;
    for (const record of iterShardRecords(shardPath, selection)) {
      if (record.domain !== session.manifest.domain) {
        throw new ValidationError(
          `${shardPath}: record ${record.recordId} has domain ` +
          `${r(record.domain)} but the manifest says ` +
          `${r(session.manifest.domain)}`);
      }
      yield toView(record, plan, shardPath);
      inShard += 1;
      total += 1;
    }
    if (inShard !== shard.records) {
      throw new ValidationError(
        `${shardPath}: holds ${inShard} records but the manifest ` +
        `says ${shard.records}`);
    }
  }
  if (total !== session.manifest.count) {
    throw new ValidationError(
      `${session.path}: iterated ${total} records but the manifest ` +
      `says ${session.manifest.count}`);
  }
}
