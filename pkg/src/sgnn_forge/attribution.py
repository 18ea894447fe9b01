"""Similarity retrieval from simulation records back to their parameters.

Persists externally produced embeddings together with the mechanistic
parameters of the simulations they encode, answers exact brute-force
cosine top-k queries, and summarizes parameter distributions over a
retrieved set.  Embedding bytes are stored verbatim: cosine similarity
ignores scale and preserved bytes keep provenance auditable.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ParameterError, SchemaError, ValidationError

DB_MAGIC = b"SGED"
DB_VERSION = 1
DEFAULT_EMBED_DIM = 1024
DEFAULT_TOP_K = 50
SUMMARY_QUANTILES = (5, 25, 50, 75, 95)

_HEADER = struct.Struct("<4sHIQ")
_INDEX_ENTRY = struct.Struct("<QQI")


@dataclass
class EmbeddingDB:
    """In-memory view of a persisted embedding database."""

    dim: int
    ids: np.ndarray               # u64, unique, in storage order
    embeddings: np.ndarray        # count x dim, float32, verbatim
    params: dict                  # id -> parameter mapping
    manifest_hash: str = ""
    _row_of: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._row_of:
            self._row_of = {int(i): row for row, i in enumerate(self.ids)}

    @property
    def count(self) -> int:
        return int(self.ids.size)


def build_db(entries, path, dim: int = DEFAULT_EMBED_DIM,
             manifest_hash: str = "") -> EmbeddingDB:
    """Persist (id, embedding, params) entries and return the loaded view.

    Embeddings are cast to float32 once and written verbatim; zero
    vectors are rejected because their similarity is undefined at query
    time.  Entries keep their given order.
    """
    ids = []
    rows = []
    blobs = []
    seen = set()
    for entry_id, embedding, params in entries:
        entry_id = int(entry_id)
        if entry_id < 0:
            raise ValidationError(f"record id must be nonnegative, got {entry_id}")
        if entry_id in seen:
            raise ValidationError(f"duplicate record id {entry_id}")
        seen.add(entry_id)
        vector = np.asarray(embedding, dtype=np.float32).reshape(-1)
        if vector.size != dim:
            raise SchemaError(
                f"embedding for id {entry_id} has dimension {vector.size}, expected {dim}"
            )
        if not np.all(np.isfinite(vector)):
            raise ValidationError(f"embedding for id {entry_id} has non-finite entries")
        if not np.any(vector):
            raise ValidationError(f"embedding for id {entry_id} is the zero vector")
        ids.append(entry_id)
        rows.append(vector)
        blobs.append(json.dumps(params, sort_keys=True).encode("utf-8"))

    matrix = (np.stack(rows) if rows
              else np.empty((0, dim), dtype=np.float32))
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(DB_MAGIC, DB_VERSION, dim, len(ids)))
        hash_bytes = manifest_hash.encode("utf-8")
        fh.write(struct.pack("<I", len(hash_bytes)))
        fh.write(hash_bytes)
        fh.write(matrix.astype("<f4").tobytes())
        offset = 0
        for entry_id, blob in zip(ids, blobs):
            fh.write(_INDEX_ENTRY.pack(entry_id, offset, len(blob)))
            offset += len(blob)
        for blob in blobs:
            fh.write(blob)
    return load_db(path)


def load_db(path) -> EmbeddingDB:
    """Load a persisted database; embedding bytes round-trip exactly."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size or data[:4] != DB_MAGIC:
        raise FormatError(f"{path}: not an embedding database (bad magic)")
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if version != DB_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    cursor = _HEADER.size
    (hash_len,) = struct.unpack_from("<I", data, cursor)
    cursor += 4
    manifest_hash = data[cursor:cursor + hash_len].decode("utf-8")
    cursor += hash_len

    matrix_bytes = count * dim * 4
    if len(data) < cursor + matrix_bytes + count * _INDEX_ENTRY.size:
        raise FormatError(f"{path}: truncated at byte {len(data)}")
    embeddings = np.frombuffer(
        data, dtype="<f4", count=count * dim, offset=cursor
    ).reshape(count, dim).copy()
    cursor += matrix_bytes

    index = []
    for _ in range(count):
        index.append(_INDEX_ENTRY.unpack_from(data, cursor))
        cursor += _INDEX_ENTRY.size
    blob_start = cursor
    ids = np.array([row[0] for row in index], dtype=np.uint64)
    if np.unique(ids).size != ids.size:
        raise ValidationError(f"{path}: duplicate record ids")
    params = {}
    for entry_id, offset, length in index:
        begin = blob_start + offset
        if begin + length > len(data):
            raise FormatError(f"{path}: parameter blob truncated at byte {len(data)}")
        params[int(entry_id)] = json.loads(data[begin:begin + length].decode("utf-8"))
    return EmbeddingDB(dim=dim, ids=ids, embeddings=embeddings, params=params,
                       manifest_hash=manifest_hash)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ParameterError(f"dimension mismatch: {a.size} vs {b.size}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ParameterError("cosine similarity is undefined for zero vectors")
    return float(a @ b / (norm_a * norm_b))


def retrieve_topk(db: EmbeddingDB, query, k: int = DEFAULT_TOP_K) -> list:
    """Exact brute-force top-k by cosine similarity.

    Returns (id, score) pairs sorted by descending score, ties broken by
    ascending id.
    """
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.size != db.dim:
        raise SchemaError(f"query dimension {query.size} does not match db dim {db.dim}")
    if np.linalg.norm(query) == 0.0:
        raise ParameterError("cosine similarity is undefined for a zero query")
    if not 1 <= k <= db.count:
        raise ParameterError(f"k must lie in [1, {db.count}], got {k}")

    matrix = db.embeddings.astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    scores = (matrix @ query) / (norms * np.linalg.norm(query))
    order = np.lexsort((db.ids, -scores))[:k]
    return [(int(db.ids[row]), float(scores[row])) for row in order]


def summarize_params(db: EmbeddingDB, ids, param_names) -> dict:
    """Distribution summary of named parameters over retrieved records.

    Per parameter: the raw values in id order, ids whose blobs lack the
    parameter (flagged, never silently dropped), percentile points, and
    the median.  A parameter absent from every requested blob is a
    schema error.
    """
    requested = [int(i) for i in ids]
    for entry_id in requested:
        if entry_id not in db.params:
            raise ParameterError(f"id {entry_id} is not in the database")
    summary = {}
    for name in param_names:
        values = []
        missing = []
        for entry_id in requested:
            blob = db.params[entry_id]
            if name in blob:
                values.append(float(blob[name]))
            else:
                missing.append(entry_id)
        if not values:
            raise SchemaError(f"parameter {name!r} is missing from every requested blob")
        array = np.array(values, dtype=np.float64)
        summary[name] = {
            "values": values,
            "missing_ids": missing,
            "quantiles": {q: float(np.percentile(array, q))
                          for q in SUMMARY_QUANTILES},
            "median": float(np.median(array)),
        }
    return summary
