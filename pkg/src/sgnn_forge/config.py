"""Generation configs: defaults, TOML loading, canonical digests.

Every corpus is generated from a fully resolved config dict.  The resolved
dict (defaults overlaid with user overrides) is stored in the corpus
manifest together with a SHA-256 digest of its canonical JSON form, so a
corpus can always be checked against the exact settings that produced it.
"""

import hashlib
import json

import numpy as np

try:
    import tomllib as tomli
except ModuleNotFoundError:
    import tomli

from .epi import DEFAULT_FEATURE_PROBS
from .errors import FormatError, SchemaError

DOMAINS = ("epi", "eco-butterfly", "eco-lynxhare", "chem", "cascade")

DOMAIN_DEFAULTS = {
    "epi": {
        "steps_per_day": 1,
        "feature_probs": dict(DEFAULT_FEATURE_PROBS),
    },
    "eco-butterfly": {},
    "eco-lynxhare": {},
    "chem": {
        "reactions_csv": None,      # None: built-in stand-in screening plate
        "min_support": 3,
        "target_mean": 0.62,
        "target_std": 0.28,
        "empirical_failure_weight": 0.6,
    },
    "cascade": {
        "graph_nodes": 1000,
        "attach_edges": 5,
        "infection_prob": 0.05,
        "max_steps": 15,
        "mask_fraction": 0.2,
        "mask_mode": "per-node",
        "pe_dim": 16,
    },
}


def load_config(path) -> dict:
    """Parse a TOML config file into a plain dict."""
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except tomli.TOMLDecodeError as err:
        raise FormatError(f"config {path} is not valid TOML: {err}") from None


def resolve_config(domain: str, overrides: dict | None = None) -> dict:
    """Overlay `overrides` onto the domain defaults, rejecting unknown keys."""
    if domain not in DOMAIN_DEFAULTS:
        raise SchemaError(f"unknown domain {domain!r}; expected one of {DOMAINS}")
    resolved = json.loads(canonical_json(DOMAIN_DEFAULTS[domain]))
    if not overrides:
        return resolved
    unknown = set(overrides) - set(resolved)
    if unknown:
        raise SchemaError(
            f"unknown config keys for domain {domain!r}: {sorted(unknown)}")
    for key, value in overrides.items():
        if isinstance(resolved[key], dict):
            if not isinstance(value, dict):
                raise SchemaError(f"config key {key!r} must be a table")
            bad = set(value) - set(resolved[key])
            if bad:
                raise SchemaError(f"unknown keys under {key!r}: {sorted(bad)}")
            resolved[key].update(value)
        else:
            resolved[key] = value
    return resolved


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, no NaN/Inf."""
    return json.dumps(jsonable(obj), sort_keys=True,
                      separators=(",", ":"), allow_nan=False)


def config_digest(config: dict) -> str:
    """SHA-256 hex digest of the canonical JSON form of a config."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()
