"""Sharded binary corpora: generation, validation, statistics, CSV export.

A corpus is a directory holding `manifest.json` plus one or more shard
files.  Shard layout (all integers little-endian):

    bytes 0-3   magic "SGNC"
    bytes 4-5   u16 format version (currently 1)
    then, per record, a u32 body length followed by the body:
        u64 record id
        u8  domain code (epi=1, eco-butterfly=2, eco-lynxhare=3,
            chem=4, cascade=5)
        u32 blob length, then canonical-JSON UTF-8 parameter blob
        u16 array count, then per array (sorted by name):
            u8 name length + ASCII name
            u8 dtype code (f32=1, f64=2, i32=3, i64=4, u8=5)
            u8 ndim, then ndim x u32 dims
            u64 payload byte length + raw little-endian payload

Record `i` of a simulation domain is drawn entirely from
`substream(master_seed, i)`, so shard bytes are independent of how record
generation is fanned out across workers.  The manifest records the resolved
config and its digest; the generation timestamp lives only in the manifest
so shards from identical settings are byte-identical.
"""

import csv
import io
import json
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .cascade import (draw_cascade_pair, edge_list_lines, generate_ba_graph,
                      laplacian_pe)
from .chem import (CATEGORIES, FAILURE_THRESHOLD, STRATUM_FRACTIONS,
                   fit_chem_model, generate_chem_corpus, load_reactions_csv,
                   standin_reactions)
from .config import (DOMAINS, canonical_json, config_digest, jsonable,
                     resolve_config)
from .eco import (ButterflyParams, LynxHareParams, sample_butterfly_community,
                  sample_lynx_hare, simulate_butterfly, simulate_lynx_hare)
from .epi import (PARAM_RANGES, ClinicalWave, EpiParams, InterventionSpec,
                  sample_epi_params, simulate_epidemic)
from .errors import FormatError, ParameterError, SchemaError, ValidationError
from .observation import ObservationSpec, observe, sample_observation_spec
from .stochastics import substream

SHARD_MAGIC = b"SGNC"
FORMAT_VERSION = 1
SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
DEFAULT_SHARD_RECORDS = 512

# Stream ids reserved for corpus-level draws; per-record streams use the
# record id itself, which generate_corpus caps well below these.
GRAPH_STREAM_ID = 1 << 62
CHEM_STREAM_ID = (1 << 62) + 1
MAX_RECORDS = 1 << 40

DOMAIN_CODES = {"epi": 1, "eco-butterfly": 2, "eco-lynxhare": 3,
                "chem": 4, "cascade": 5}
CODE_DOMAINS = {v: k for k, v in DOMAIN_CODES.items()}

DTYPE_CODES = {"<f4": 1, "<f8": 2, "<i4": 3, "<i8": 4, "|u1": 5}
CODE_DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<i4"),
               4: np.dtype("<i8"), 5: np.dtype("u1")}

_HEADER = struct.Struct("<4sH")


@dataclass
class CorpusRecord:
    """One generated example: id, parameter blob, and named arrays."""

    record_id: int
    domain: str
    blob: dict
    arrays: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# parameter blob (de)serialization

def epi_params_to_dict(params: EpiParams) -> dict:
    return jsonable(asdict(params))


def epi_params_from_dict(d: dict) -> EpiParams:
    npi = InterventionSpec(**d["npi"]) if d.get("npi") else None
    return EpiParams(
        population=int(d["population"]),
        horizon_days=int(d["horizon_days"]),
        seed_infected=int(d["seed_infected"]),
        has_exposed=bool(d["has_exposed"]),
        has_asym=bool(d["has_asym"]),
        has_waning=bool(d["has_waning"]),
        has_demography=bool(d["has_demography"]),
        has_npi=bool(d["has_npi"]),
        has_superspreading=bool(d["has_superspreading"]),
        beta_waves=[(int(s), float(b)) for s, b in d["beta_waves"]],
        recovery_rate=float(d["recovery_rate"]),
        progression_rate=float(d["progression_rate"]),
        waning_rate=float(d["waning_rate"]),
        turnover_rate=float(d["turnover_rate"]),
        asym_fraction=float(d["asym_fraction"]),
        asym_infectivity=float(d["asym_infectivity"]),
        seasonal_harmonics=[(float(a), int(k), float(p))
                            for a, k, p in d["seasonal_harmonics"]],
        dispersion=float(d["dispersion"]),
        importation_rate=float(d["importation_rate"]),
        npi=npi,
        clinical_per_wave=[ClinicalWave(**w) for w in d["clinical_per_wave"]],
    )


def observation_spec_to_dict(spec: ObservationSpec) -> dict:
    return jsonable(asdict(spec))


def observation_spec_from_dict(d: dict) -> ObservationSpec:
    d = dict(d)
    d["weekday_effects"] = tuple(d["weekday_effects"])
    return ObservationSpec(**d)


def butterfly_params_from_dict(d: dict) -> ButterflyParams:
    return ButterflyParams(
        n_species=int(d["n_species"]),
        growth_rates=np.asarray(d["growth_rates"], dtype=float),
        initial_abundance=np.asarray(d["initial_abundance"], dtype=float),
        capacity=np.asarray(d["capacity"], dtype=float),
        competition=np.asarray(d["competition"], dtype=float),
        seasonal_amplitude=float(d["seasonal_amplitude"]),
        seasonal_phase=float(d["seasonal_phase"]),
        env_rho=float(d["env_rho"]),
        env_sd=float(d["env_sd"]),
        horizon_years=int(d["horizon_years"]),
    )


def lynx_hare_params_from_dict(d: dict) -> LynxHareParams:
    return LynxHareParams(**{k: (int(v) if k == "horizon_years" else float(v))
                             for k, v in d.items()})


# ---------------------------------------------------------------------------
# binary record codec

def encode_record(record: CorpusRecord) -> bytes:
    """Serialize one record to its framed binary form."""
    if record.domain not in DOMAIN_CODES:
        raise SchemaError(f"unknown domain {record.domain!r}")
    body = io.BytesIO()
    blob = canonical_json(record.blob).encode("utf-8")
    body.write(struct.pack("<QB", record.record_id, DOMAIN_CODES[record.domain]))
    body.write(struct.pack("<I", len(blob)))
    body.write(blob)
    names = sorted(record.arrays)
    body.write(struct.pack("<H", len(names)))
    for name in names:
        arr = np.ascontiguousarray(record.arrays[name])
        code = DTYPE_CODES.get(arr.dtype.str)
        if code is None:
            raise SchemaError(
                f"array {name!r} has unsupported dtype {arr.dtype}")
        encoded_name = name.encode("ascii")
        payload = arr.tobytes()
        body.write(struct.pack("<B", len(encoded_name)))
        body.write(encoded_name)
        body.write(struct.pack("<BB", code, arr.ndim))
        body.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        body.write(struct.pack("<Q", len(payload)))
        body.write(payload)
    raw = body.getvalue()
    return struct.pack("<I", len(raw)) + raw


class _Cursor:
    """Bounds-checked reader over one shard's bytes."""

    def __init__(self, data: bytes, path):
        self.data = data
        self.path = path
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"{self.path}: truncated at byte {self.pos} "
                f"(needed {n} more bytes, file has {len(self.data)})")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _decode_body(cur: _Cursor) -> CorpusRecord:
    record_id, code = cur.unpack("<QB")
    domain = CODE_DOMAINS.get(code)
    if domain is None:
        raise FormatError(f"{cur.path}: unknown domain code {code} "
                          f"at byte {cur.pos - 1}")
    (blob_len,) = cur.unpack("<I")
    try:
        blob = json.loads(cur.take(blob_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise FormatError(
            f"{cur.path}: record {record_id} has a corrupt blob: {err}") from None
    (n_arrays,) = cur.unpack("<H")
    arrays = {}
    for _ in range(n_arrays):
        (name_len,) = cur.unpack("<B")
        name = cur.take(name_len).decode("ascii")
        dcode, ndim = cur.unpack("<BB")
        dtype = CODE_DTYPES.get(dcode)
        if dtype is None:
            raise FormatError(f"{cur.path}: record {record_id} array "
                              f"{name!r} has unknown dtype code {dcode}")
        shape = cur.unpack(f"<{ndim}I")
        (payload_len,) = cur.unpack("<Q")
        expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if payload_len != expected:
            raise FormatError(
                f"{cur.path}: record {record_id} array {name!r} payload is "
                f"{payload_len} bytes, shape {shape} needs {expected}")
        arrays[name] = np.frombuffer(cur.take(payload_len),
                                     dtype=dtype).reshape(shape).copy()
    return CorpusRecord(record_id, domain, blob, arrays)


def iter_shard(path):
    """Yield the records of one shard file in order."""
    with open(path, "rb") as fh:
        data = fh.read()
    cur = _Cursor(data, path)
    magic, version = cur.unpack(_HEADER.format)
    if magic != SHARD_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, not a corpus shard")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version} "
                          f"(reader supports {FORMAT_VERSION})")
    while cur.pos < len(data):
        (body_len,) = cur.unpack("<I")
        frame_end = cur.pos + body_len
        if frame_end > len(data):
            raise FormatError(
                f"{path}: truncated at byte {cur.pos} (record body of "
                f"{body_len} bytes exceeds file end {len(data)})")
        record = _decode_body(cur)
        if cur.pos != frame_end:
            raise FormatError(
                f"{path}: record {record.record_id} body ended at byte "
                f"{cur.pos}, frame says {frame_end}")
        yield record


# ---------------------------------------------------------------------------
# per-domain record builders

def _epi_record(master_seed: int, record_id: int, cfg: dict) -> CorpusRecord:
    rng = substream(master_seed, record_id)
    params = sample_epi_params(rng, feature_probs=cfg["feature_probs"])
    spec = sample_observation_spec(rng, params.horizon_days)
    traj = simulate_epidemic(params, rng, steps_per_day=cfg["steps_per_day"])
    reported = observe(traj.true_cases, traj.true_hosp, traj.true_deaths,
                       spec, rng)
    blob = {
        "params": epi_params_to_dict(params),
        "observation": observation_spec_to_dict(spec),
        "intervention_log": jsonable(traj.intervention_log),
    }
    arrays = {
        "true_cases": traj.true_cases.astype("<f4"),
        "true_hosp": traj.true_hosp.astype("<f4"),
        "true_deaths": traj.true_deaths.astype("<f4"),
        "reported_cases": reported[0].astype("<f4"),
        "reported_hosp": reported[1].astype("<f4"),
        "reported_deaths": reported[2].astype("<f4"),
    }
    return CorpusRecord(record_id, "epi", blob, arrays)


def _butterfly_record(master_seed: int, record_id: int, cfg: dict) -> CorpusRecord:
    rng = substream(master_seed, record_id)
    params = sample_butterfly_community(rng)
    traj = simulate_butterfly(params, rng)
    blob = {"params": jsonable(asdict(params))}
    arrays = {"latent": traj.latent.astype("<f8"),
              "observed_log10": traj.observed_log10.astype("<f4")}
    return CorpusRecord(record_id, "eco-butterfly", blob, arrays)


def _lynx_hare_record(master_seed: int, record_id: int, cfg: dict) -> CorpusRecord:
    rng = substream(master_seed, record_id)
    params = sample_lynx_hare(rng)
    traj = simulate_lynx_hare(params, rng)
    blob = {"params": jsonable(asdict(params))}
    arrays = {"latent": traj.latent.astype("<f8"),
              "observed_log10": traj.observed_log10.astype("<f4")}
    return CorpusRecord(record_id, "eco-lynxhare", blob, arrays)


def _chem_record(dataset, record_id: int) -> CorpusRecord:
    t = dataset.tuples[record_id]
    y = float(dataset.yields[record_id])
    blob = dict(t._asdict())
    blob["stratum"] = dataset.provenance[record_id]
    blob["is_failure"] = bool(y < FAILURE_THRESHOLD)
    arrays = {"yield": np.array([y], dtype="<f4")}
    return CorpusRecord(record_id, "chem", blob, arrays)


def _cascade_record(master_seed: int, record_id: int, cfg: dict,
                    graph) -> CorpusRecord:
    rng = substream(master_seed, record_id)
    true_cascade, masked = draw_cascade_pair(
        graph, rng, p=cfg["infection_prob"], max_steps=cfg["max_steps"],
        mask_frac=cfg["mask_fraction"], mask_mode=cfg["mask_mode"])
    blob = {
        "source": int(true_cascade.source),
        "infection_prob": float(true_cascade.infection_prob),
        "max_steps": int(true_cascade.max_steps),
        "mask_fraction": float(cfg["mask_fraction"]),
        "mask_mode": cfg["mask_mode"],
        "graph": {"nodes": graph.n, "attach_edges": graph.attach_edges,
                  "model": graph.model, "edge_count": graph.edge_count},
    }
    arrays = {"infection_time": true_cascade.infection_time.astype("<i4"),
              "observed_mask": masked.observed_mask.astype("u1")}
    return CorpusRecord(record_id, "cascade", blob, arrays)


# ---------------------------------------------------------------------------
# generation

def _chem_model(cfg: dict):
    if cfg.get("reactions_csv"):
        data = load_reactions_csv(cfg["reactions_csv"])
    else:
        data = standin_reactions()
    return fit_chem_model(
        data, min_support=cfg["min_support"], target_mean=cfg["target_mean"],
        target_std=cfg["target_std"],
        empirical_failure_weight=cfg["empirical_failure_weight"])


def generate_corpus(domain: str, count: int, master_seed: int, out_dir,
                    config: dict | None = None, workers: int = 1,
                    shard_records: int = DEFAULT_SHARD_RECORDS) -> dict:
    """Generate a corpus directory; returns the manifest dict.

    Record `i` is a deterministic function of `(master_seed, i)` and the
    resolved config, so shard bytes do not depend on `workers`.
    """
    if not 1 <= count <= MAX_RECORDS:
        raise ParameterError(f"count must be in [1, {MAX_RECORDS}], got {count}")
    if workers < 1:
        raise ParameterError(f"workers must be >= 1, got {workers}")
    if shard_records < 1:
        raise ParameterError(f"shard_records must be >= 1, got {shard_records}")
    cfg = resolve_config(domain, config)
    os.makedirs(out_dir, exist_ok=True)

    auxiliary = {}
    if domain == "epi":
        def build(rid):
            return encode_record(_epi_record(master_seed, rid, cfg))
    elif domain == "eco-butterfly":
        def build(rid):
            return encode_record(_butterfly_record(master_seed, rid, cfg))
    elif domain == "eco-lynxhare":
        def build(rid):
            return encode_record(_lynx_hare_record(master_seed, rid, cfg))
    elif domain == "chem":
        dataset = generate_chem_corpus(_chem_model(cfg), count,
                                       substream(master_seed, CHEM_STREAM_ID))

        def build(rid):
            return encode_record(_chem_record(dataset, rid))
    elif domain == "cascade":
        graph = generate_ba_graph(cfg["graph_nodes"], cfg["attach_edges"],
                                  substream(master_seed, GRAPH_STREAM_ID),
                                  seed_label=master_seed)
        with open(os.path.join(out_dir, "edges.txt"), "w") as fh:
            for line in edge_list_lines(graph):
                fh.write(line + "\n")
        pe = laplacian_pe(graph, cfg["pe_dim"])
        np.save(os.path.join(out_dir, "lappe.npy"), pe.vectors)
        auxiliary = {"graph_file": "edges.txt", "pe_file": "lappe.npy",
                     "pe_dim": cfg["pe_dim"], "graph_nodes": graph.n,
                     "attach_edges": graph.attach_edges,
                     "edge_count": graph.edge_count}

        def build(rid):
            return encode_record(_cascade_record(master_seed, rid, cfg, graph))
    else:
        raise SchemaError(f"unknown domain {domain!r}; expected one of {DOMAINS}")

    shards = []
    ids = range(count)
    shard_path = None
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            encoded = pool.map(build, ids) if workers > 1 else map(build, ids)
            fh = None
            in_shard = 0
            for rid, raw in zip(ids, encoded):
                if fh is None:
                    name = f"shard_{len(shards):05d}.sgnc"
                    shard_path = os.path.join(out_dir, name)
                    fh = open(shard_path, "wb")
                    fh.write(_HEADER.pack(SHARD_MAGIC, FORMAT_VERSION))
                    shards.append({"file": name, "records": 0})
                    in_shard = 0
                fh.write(raw)
                in_shard += 1
                shards[-1]["records"] = in_shard
                if in_shard == shard_records:
                    fh.close()
                    fh = None
            if fh is not None:
                fh.close()
    except BaseException:
        if shard_path is not None and os.path.exists(shard_path):
            os.remove(shard_path)
        raise

    manifest = {
        "schema_version": SCHEMA_VERSION,
        "domain": domain,
        "count": count,
        "master_seed": master_seed,
        "config": cfg,
        "config_digest": config_digest(cfg),
        "created": _utc_now(),
        "shards": shards,
        "auxiliary": auxiliary,
    }
    with open(os.path.join(out_dir, MANIFEST_NAME), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _utc_now() -> str:
    from datetime import datetime, timezone
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# reading and validation

def read_manifest(corpus_dir) -> dict:
    path = os.path.join(corpus_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        raise FormatError(f"{corpus_dir} has no {MANIFEST_NAME}")
    with open(path) as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as err:
            raise FormatError(f"{path} is not valid JSON: {err}") from None
    for key in ("schema_version", "domain", "count", "config",
                "config_digest", "shards"):
        if key not in manifest:
            raise SchemaError(f"{path} is missing key {key!r}")
    if manifest["schema_version"] != SCHEMA_VERSION:
        raise FormatError(
            f"{path}: unsupported schema version {manifest['schema_version']}")
    return manifest


def iter_corpus(corpus_dir):
    """Yield every record of a corpus in shard order, checking counts."""
    manifest = read_manifest(corpus_dir)
    seen = 0
    for entry in manifest["shards"]:
        shard_seen = 0
        for record in iter_shard(os.path.join(corpus_dir, entry["file"])):
            shard_seen += 1
            seen += 1
            yield record
        if shard_seen != entry["records"]:
            raise ValidationError(
                f"{entry['file']} holds {shard_seen} records, "
                f"manifest says {entry['records']}")
    if seen != manifest["count"]:
        raise ValidationError(
            f"corpus holds {seen} records, manifest says {manifest['count']}")


def _validate_epi_record(record: CorpusRecord):
    params = epi_params_from_dict(record.blob["params"])
    observation_spec_from_dict(record.blob["observation"])
    horizon = params.horizon_days
    for name in ("true_cases", "true_hosp", "true_deaths",
                 "reported_cases", "reported_hosp", "reported_deaths"):
        arr = record.arrays.get(name)
        if arr is None:
            raise ValidationError(f"record {record.record_id} lacks {name!r}")
        if arr.shape != (horizon,):
            raise ValidationError(
                f"record {record.record_id} array {name!r} has shape "
                f"{arr.shape}, horizon is {horizon}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValidationError(
                f"record {record.record_id} array {name!r} has invalid values")


def _validate_eco_record(record: CorpusRecord):
    if record.domain == "eco-butterfly":
        params = butterfly_params_from_dict(record.blob["params"])
        n_series = params.n_species
    else:
        params = lynx_hare_params_from_dict(record.blob["params"])
        n_series = 2
    shape = (n_series, params.horizon_years)
    for name in ("latent", "observed_log10"):
        arr = record.arrays.get(name)
        if arr is None:
            raise ValidationError(f"record {record.record_id} lacks {name!r}")
        if arr.shape != shape:
            raise ValidationError(
                f"record {record.record_id} array {name!r} has shape "
                f"{arr.shape}, expected {shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(
                f"record {record.record_id} array {name!r} has non-finite values")
    if np.any(record.arrays["latent"] < 0):
        raise ValidationError(
            f"record {record.record_id} has negative latent abundance")


def _validate_chem_record(record: CorpusRecord):
    for cat in CATEGORIES:
        if cat not in record.blob:
            raise ValidationError(
                f"record {record.record_id} lacks component {cat!r}")
    if record.blob.get("stratum") not in STRATUM_FRACTIONS:
        raise ValidationError(
            f"record {record.record_id} has unknown stratum "
            f"{record.blob.get('stratum')!r}")
    arr = record.arrays.get("yield")
    if arr is None or arr.shape != (1,):
        raise ValidationError(f"record {record.record_id} lacks a scalar yield")
    y = float(arr[0])
    if not 0.0 <= y <= 1.0:
        raise ValidationError(
            f"record {record.record_id} yield {y} outside [0, 1]")
    if bool(record.blob.get("is_failure")) != (y < FAILURE_THRESHOLD):
        raise ValidationError(
            f"record {record.record_id} failure flag disagrees with yield {y}")


def _validate_cascade_record(record: CorpusRecord):
    graph_meta = record.blob.get("graph", {})
    n = int(graph_meta.get("nodes", 0))
    times = record.arrays.get("infection_time")
    mask = record.arrays.get("observed_mask")
    if times is None or mask is None:
        raise ValidationError(
            f"record {record.record_id} lacks infection_time/observed_mask")
    if times.shape != (n,) or mask.shape != (n,):
        raise ValidationError(
            f"record {record.record_id} arrays do not match graph size {n}")
    source = int(record.blob["source"])
    if not 0 <= source < n:
        raise ValidationError(
            f"record {record.record_id} source {source} outside graph")
    if times[source] != 0:
        raise ValidationError(
            f"record {record.record_id} source infection time is "
            f"{times[source]}, expected 0")
    if np.any(times < -1) or np.any(times > int(record.blob["max_steps"])):
        raise ValidationError(
            f"record {record.record_id} has infection times outside "
            f"[-1, max_steps]")
    if np.any(mask[times < 0] == 0):
        raise ValidationError(
            f"record {record.record_id} marks uninfected nodes as masked")


_VALIDATORS = {
    "epi": _validate_epi_record,
    "eco-butterfly": _validate_eco_record,
    "eco-lynxhare": _validate_eco_record,
    "chem": _validate_chem_record,
    "cascade": _validate_cascade_record,
}


def validate_corpus(corpus_dir) -> dict:
    """Fully check a corpus directory; returns a summary dict."""
    manifest = read_manifest(corpus_dir)
    domain = manifest["domain"]
    if domain not in DOMAINS:
        raise ValidationError(f"manifest names unknown domain {domain!r}")
    if config_digest(manifest["config"]) != manifest["config_digest"]:
        raise ValidationError(
            "manifest config does not match its recorded digest")
    check = _VALIDATORS[domain]
    count = 0
    for expected_id, record in enumerate(iter_corpus(corpus_dir)):
        if record.record_id != expected_id:
            raise ValidationError(
                f"record {count} has id {record.record_id}, "
                f"expected {expected_id}")
        if record.domain != domain:
            raise ValidationError(
                f"record {record.record_id} has domain {record.domain!r}, "
                f"manifest says {domain!r}")
        check(record)
        count += 1
    return {"domain": domain, "count": count,
            "shards": len(manifest["shards"]), "ok": True}


# ---------------------------------------------------------------------------
# statistics

_FLAG_FIELDS = ("has_exposed", "has_asym", "has_npi", "has_demography",
                "has_waning", "has_superspreading")


def _epi_scalar_checks(p: dict):
    """Yield (range_name, value) pairs for every constrained draw in p."""
    for _, beta in p["beta_waves"]:
        yield "transmission_rate", beta
    yield "recovery_rate", p["recovery_rate"]
    yield "progression_rate", p["progression_rate"]
    yield "waning_rate", p["waning_rate"]
    yield "turnover_rate", p["turnover_rate"]
    yield "asym_fraction", p["asym_fraction"]
    yield "asym_infectivity", p["asym_infectivity"]
    yield "dispersion", p["dispersion"]
    yield "population", p["population"]
    for amp, _, _ in p["seasonal_harmonics"]:
        yield "seasonal_amplitude", amp
    for wave in p["clinical_per_wave"]:
        for name in ("p_hosp", "p_death_given_hosp",
                     "hosp_delay_mean", "death_delay_mean"):
            yield name, wave[name]
    if p["npi"]:
        yield "npi_reduction", p["npi"]["reduction_factor"]
        yield "npi_min_duration", p["npi"]["min_duration_days"]
    if p["importation_rate"] > 0:
        yield "importation_rate", p["importation_rate"]


def _value_summary(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"min": float(v.min()), "max": float(v.max()),
            "mean": float(v.mean()),
            "q05": float(np.percentile(v, 5)),
            "median": float(np.percentile(v, 50)),
            "q95": float(np.percentile(v, 95))}


def epi_param_stats(params_iter) -> dict:
    """Flag frequencies, support checks, and value summaries over configs.

    Accepts EpiParams instances or their dict form.  Support violations
    count scalar draws that fall outside the documented sampling ranges;
    the summary block reports min/max/mean/quantiles per parameter.
    """
    n = 0
    flags = {name: 0 for name in _FLAG_FIELDS}
    checked = 0
    violations = {}
    values = {}
    for params in params_iter:
        p = epi_params_to_dict(params) if isinstance(params, EpiParams) else params
        n += 1
        for name in _FLAG_FIELDS:
            flags[name] += bool(p[name])
        for range_name, value in _epi_scalar_checks(p):
            checked += 1
            values.setdefault(range_name, []).append(value)
            lo, hi = PARAM_RANGES[range_name]
            if not lo <= value <= hi:
                violations[range_name] = violations.get(range_name, 0) + 1
    if n == 0:
        return {"count": 0}
    return {
        "count": n,
        "flag_frequency": {name: flags[name] / n for name in _FLAG_FIELDS},
        "parameter_summary": {name: _value_summary(v)
                              for name, v in sorted(values.items())},
        "values_checked": checked,
        "support_violations": violations,
        "in_support": not violations,
    }


def chem_yield_stats(yields, strata) -> dict:
    """Mean/spread, failure rate, and stratum mix of a reaction corpus."""
    y = np.asarray(yields, dtype=float)
    strata = list(strata)
    if len(y) != len(strata):
        raise ParameterError("yields and strata must align")
    if len(y) == 0:
        return {"count": 0}
    frac = {label: strata.count(label) / len(strata)
            for label in STRATUM_FRACTIONS}
    return {
        "count": int(len(y)),
        "yield_mean": float(np.mean(y)),
        "yield_std": float(np.std(y)),
        "yield_summary": _value_summary(y),
        "failure_rate": float(np.mean(y < FAILURE_THRESHOLD)),
        "stratum_fractions": frac,
    }


def _eco_stats(extracted) -> dict:
    """extracted: (n_species, extinct_flag, final_latent_list) triples."""
    if not extracted:
        return {"count": 0}
    species = [e[0] for e in extracted]
    extinct = sum(e[1] for e in extracted)
    final_latent = [v for e in extracted for v in e[2]]
    return {"count": len(extracted), "mean_species": float(np.mean(species)),
            "final_year_extinction_frac": extinct / len(extracted),
            "final_abundance_summary": _value_summary(final_latent)}


def _cascade_stats(extracted) -> dict:
    """extracted: (infected_count, source_masked_flag) pairs."""
    if not extracted:
        return {"count": 0}
    sizes = [e[0] for e in extracted]
    source_masked = sum(e[1] for e in extracted)
    return {"count": len(extracted), "mean_infected": float(np.mean(sizes)),
            "median_infected": float(np.median(sizes)),
            "infected_summary": _value_summary(sizes),
            "source_masked_frac": source_masked / len(extracted)}


def _stats_extractor(domain):
    """Per-record reducer keeping only what the domain summary needs."""
    if domain == "epi":
        return lambda r: r.blob["params"]
    if domain in ("eco-butterfly", "eco-lynxhare"):
        def eco(r):
            latent = r.arrays["latent"]
            return (latent.shape[0], int(np.any(latent[:, -1] <= 1e-6)),
                    latent[:, -1].tolist())
        return eco
    if domain == "chem":
        return lambda r: (float(r.arrays["yield"][0]), r.blob["stratum"])

    def cascade(r):
        times = r.arrays["infection_time"]
        mask = r.arrays["observed_mask"]
        return (int(np.sum(times >= 0)),
                int(mask[int(r.blob["source"])] == 0))
    return cascade


def corpus_stats_from_records(domain: str, records) -> dict:
    """Aggregate statistics plus an array-shape census over records."""
    if domain not in DOMAINS:
        raise SchemaError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    extract = _stats_extractor(domain)
    shapes = {}
    extracted = []
    for record in records:
        extracted.append(extract(record))
        for name, arr in record.arrays.items():
            key = "x".join(str(d) for d in arr.shape)
            shapes.setdefault(name, {})
            shapes[name][key] = shapes[name].get(key, 0) + 1
    if domain == "epi":
        stats = epi_param_stats(extracted)
    elif domain in ("eco-butterfly", "eco-lynxhare"):
        stats = _eco_stats(extracted)
    elif domain == "chem":
        stats = chem_yield_stats([e[0] for e in extracted],
                                 [e[1] for e in extracted])
    else:
        stats = _cascade_stats(extracted)
    stats["array_shapes"] = shapes
    return stats


def corpus_stats(corpus_dir) -> dict:
    """Read a corpus directory and summarize it."""
    manifest = read_manifest(corpus_dir)
    stats = corpus_stats_from_records(manifest["domain"], iter_corpus(corpus_dir))
    stats["domain"] = manifest["domain"]
    return stats


# ---------------------------------------------------------------------------
# CSV export

def _fmt(value) -> str:
    """Shortest decimal string that round-trips to the float32 value."""
    return str(np.float32(value))


def _export_epi(records, out_dir, weekly: bool):
    name = "epi_series_weekly.csv" if weekly else "epi_series.csv"
    pairs = (("cases", "true_cases", "reported_cases"),
             ("hosp", "true_hosp", "reported_hosp"),
             ("deaths", "true_deaths", "reported_deaths"))
    with open(os.path.join(out_dir, name), "w", newline="") as fh:
        writer = csv.writer(fh)
        time_col = "week" if weekly else "day"
        writer.writerow(["record_id", time_col, "series_name",
                         "true_value", "reported_value"])
        for record in records:
            for series, true_name, rep_name in pairs:
                true = record.arrays[true_name]
                rep = record.arrays[rep_name]
                if weekly:
                    n_weeks = len(true) // 7
                    true = true[:n_weeks * 7].reshape(n_weeks, 7).sum(axis=1)
                    rep = rep[:n_weeks * 7].reshape(n_weeks, 7).sum(axis=1)
                for t, (tv, rv) in enumerate(zip(true, rep)):
                    writer.writerow([record.record_id, t, series,
                                     _fmt(tv), _fmt(rv)])
    return name


def _export_eco(records, out_dir):
    with open(os.path.join(out_dir, "eco_series.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "species", "year",
                         "latent", "observed_log10"])
        for record in records:
            latent = record.arrays["latent"]
            observed = record.arrays["observed_log10"]
            for s in range(latent.shape[0]):
                for year in range(latent.shape[1]):
                    writer.writerow([record.record_id, s, year,
                                     _fmt(latent[s, year]),
                                     _fmt(observed[s, year])])
    return "eco_series.csv"


def _export_chem(records, out_dir):
    with open(os.path.join(out_dir, "chem_reactions.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", *CATEGORIES, "yield",
                         "stratum", "is_failure"])
        for record in records:
            writer.writerow([record.record_id,
                             *(record.blob[cat] for cat in CATEGORIES),
                             _fmt(record.arrays["yield"][0]),
                             record.blob["stratum"],
                             int(record.blob["is_failure"])])
    return "chem_reactions.csv"


def _export_cascade(records, out_dir):
    with open(os.path.join(out_dir, "cascade_nodes.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "node", "infection_time", "masked"])
        for record in records:
            times = record.arrays["infection_time"]
            mask = record.arrays["observed_mask"].astype(bool)
            for node in np.flatnonzero(times >= 0):
                writer.writerow([record.record_id, int(node),
                                 int(times[node]), int(not mask[node])])
    return "cascade_nodes.csv"


def export_csv(corpus_dir, out_dir, weekly: bool = False) -> str:
    """Flatten a corpus to one CSV file; returns the file name written.

    Floats are printed as the shortest decimal that round-trips at float32,
    so any reader that parses and rounds to float32 recovers the stored
    values bit-exactly.  `weekly` aggregates outbreak series to 7-day sums
    (incomplete trailing weeks are dropped) and only applies to that domain.
    """
    manifest = read_manifest(corpus_dir)
    os.makedirs(out_dir, exist_ok=True)
    records = iter_corpus(corpus_dir)
    domain = manifest["domain"]
    if domain == "epi":
        return _export_epi(records, out_dir, weekly)
    if weekly:
        raise ParameterError(f"weekly aggregation applies only to outbreak "
                             f"series, not domain {domain!r}")
    if domain in ("eco-butterfly", "eco-lynxhare"):
        return _export_eco(records, out_dir)
    if domain == "chem":
        return _export_chem(records, out_dir)
    if domain == "cascade":
        return _export_cascade(records, out_dir)
    raise SchemaError(f"unknown domain {domain!r}")
