"""Embedding database persistence and similarity retrieval."""

import math
import time

import numpy as np
import pytest

from sgnn_forge.attribution import (EmbeddingDB, build_db, cosine_similarity,
                                    load_db, retrieve_topk, summarize_params)
from sgnn_forge.errors import (FormatError, ParameterError, SchemaError,
                               ValidationError)
from sgnn_forge.stochastics import substream


def make_entries(rng, count, dim, id_start=0):
    return [(id_start + i,
             rng.normal(0.0, 1.0, dim).astype(np.float32),
             {"beta": float(rng.uniform(0.1, 1.0)),
              "population": float(rng.integers(10 ** 5, 10 ** 7))})
            for i in range(count)]


class TestPersistence:
    def test_round_trip_bytes(self, tmp_path):
        rng = substream(840, 0)
        entries = make_entries(rng, 64, 32)
        path = tmp_path / "db.sged"
        built = build_db(entries, path, dim=32, manifest_hash="abc123")
        loaded = load_db(path)
        assert loaded.embeddings.tobytes() == built.embeddings.tobytes()
        for entry_id, vector, params in entries:
            row = loaded._row_of[entry_id]
            assert loaded.embeddings[row].tobytes() == vector.tobytes()
            assert loaded.params[entry_id] == params
        assert loaded.manifest_hash == "abc123"

    def test_duplicate_id_rejected(self, tmp_path):
        rng = substream(840, 1)
        entries = make_entries(rng, 3, 8) + make_entries(rng, 1, 8, id_start=2)
        with pytest.raises(ValidationError):
            build_db(entries, tmp_path / "dup.sged", dim=8)

    def test_dimension_mismatch_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            build_db([(0, np.ones(7, dtype=np.float32), {})],
                     tmp_path / "dim.sged", dim=8)

    def test_zero_embedding_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            build_db([(0, np.zeros(8, dtype=np.float32), {})],
                     tmp_path / "zero.sged", dim=8)

    def test_corrupted_magic_rejected(self, tmp_path):
        rng = substream(840, 2)
        path = tmp_path / "ok.sged"
        build_db(make_entries(rng, 4, 8), path, dim=8)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            load_db(path)

    def test_truncated_file_rejected(self, tmp_path):
        rng = substream(840, 3)
        path = tmp_path / "trunc.sged"
        build_db(make_entries(rng, 4, 8), path, dim=8)
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(FormatError):
            load_db(path)

    def test_empty_db_round_trips(self, tmp_path):
        path = tmp_path / "empty.sged"
        db = build_db([], path, dim=16)
        assert db.count == 0
        assert load_db(path).count == 0

    def test_build_speed_at_scale(self, tmp_path):
        rng = substream(840, 4)
        entries = [(i, rng.normal(0.0, 1.0, 1024).astype(np.float32), {"i": i})
                   for i in range(10_000)]
        start = time.perf_counter()
        db = build_db(entries, tmp_path / "big.sged", dim=1024)
        elapsed = time.perf_counter() - start
        assert db.count == 10_000
        assert elapsed < 5.0


class TestCosine:
    def test_identical_vectors(self):
        v = np.array([0.3, -1.2, 4.0])
        assert math.isclose(cosine_similarity(v, v), 1.0, rel_tol=1e-12)

    def test_orthogonal_vectors(self):
        assert abs(cosine_similarity([1.0, 0.0], [0.0, 3.0])) < 1e-15

    def test_known_angle(self):
        assert math.isclose(cosine_similarity([1.0, 0.0], [1.0, 1.0]),
                            math.sqrt(2.0) / 2.0, rel_tol=1e-12)

    def test_scale_invariance(self):
        rng = substream(840, 5)
        a = rng.normal(0.0, 1.0, 20)
        b = rng.normal(0.0, 1.0, 20)
        assert math.isclose(cosine_similarity(a, b),
                            cosine_similarity(17.0 * a, 0.001 * b), rel_tol=1e-12)

    def test_zero_vector_rejected(self):
        with pytest.raises(ParameterError):
            cosine_similarity([0.0, 0.0], [1.0, 1.0])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            cosine_similarity([1.0], [1.0, 2.0])


@pytest.fixture(scope="module")
def db(tmp_path_factory):
    rng = substream(841, 0)
    entries = make_entries(rng, 1000, 64)
    return build_db(entries, tmp_path_factory.mktemp("db") / "r.sged", dim=64)


class TestRetrieval:
    def test_stored_embedding_retrieves_itself(self, db):
        query = db.embeddings[137]
        top_id, top_score = retrieve_topk(db, query, k=1)[0]
        assert top_id == 137
        assert math.isclose(top_score, 1.0, rel_tol=1e-9)

    def test_matches_exhaustive_sort_oracle(self, db):
        rng = substream(841, 1)
        for _ in range(20):
            query = rng.normal(0.0, 1.0, 64)
            scored = sorted(
                ((cosine_similarity(db.embeddings[row], query), -int(db.ids[row]))
                 for row in range(db.count)),
                reverse=True)
            expected = [(-neg_id, score) for score, neg_id in scored[:50]]
            got = retrieve_topk(db, query, k=50)
            assert [entry_id for entry_id, _ in got] == [e for e, _ in expected]
            for (_, got_score), (_, want_score) in zip(got, expected):
                assert math.isclose(got_score, want_score, abs_tol=1e-9)

    def test_full_ranking_non_increasing_and_prefix_stable(self, db):
        rng = substream(841, 2)
        query = rng.normal(0.0, 1.0, 64)
        full = retrieve_topk(db, query, k=db.count)
        scores = [score for _, score in full]
        assert all(a >= b for a, b in zip(scores, scores[1:]))
        assert retrieve_topk(db, query, k=10) == full[:10]

    def test_scan_speed_at_scale(self, tmp_path):
        rng = substream(841, 3)
        entries = [(i, rng.normal(0.0, 1.0, 1024).astype(np.float32), {})
                   for i in range(10_000)]
        db = build_db(entries, tmp_path / "speed.sged", dim=1024)
        query = rng.normal(0.0, 1.0, 1024)
        start = time.perf_counter()
        result = retrieve_topk(db, query, k=50)
        elapsed = time.perf_counter() - start
        assert len(result) == 50
        assert elapsed < 5.0

    def test_invalid_queries_rejected(self, db):
        rng = substream(841, 4)
        with pytest.raises(SchemaError):
            retrieve_topk(db, rng.normal(0.0, 1.0, 63), k=5)
        with pytest.raises(ParameterError):
            retrieve_topk(db, np.zeros(64), k=5)
        with pytest.raises(ParameterError):
            retrieve_topk(db, rng.normal(0.0, 1.0, 64), k=1001)


class TestParamSummary:
    def make_db(self, tmp_path):
        rng = substream(842, 0)
        entries = [(i, rng.normal(0.0, 1.0, 8).astype(np.float32),
                    {"population": 10.1e6} if i < 5 else
                    {"population": 10.1e6, "beta": 0.2 + 0.1 * i})
                   for i in range(10)]
        return build_db(entries, tmp_path / "s.sged", dim=8)

    def test_constant_parameter_has_zero_spread(self, tmp_path):
        db = self.make_db(tmp_path)
        summary = summarize_params(db, range(10), ["population"])
        block = summary["population"]
        assert block["median"] == 10.1e6
        assert block["quantiles"][5] == block["quantiles"][95] == 10.1e6
        assert block["missing_ids"] == []

    def test_median_matches_sort_oracle(self, tmp_path):
        db = self.make_db(tmp_path)
        ids = list(range(5, 10))
        summary = summarize_params(db, ids, ["beta"])
        values = sorted(summary["beta"]["values"])
        assert math.isclose(summary["beta"]["median"], values[len(values) // 2],
                            rel_tol=1e-12)

    def test_partial_missing_flagged_not_dropped(self, tmp_path):
        db = self.make_db(tmp_path)
        summary = summarize_params(db, range(10), ["beta"])
        assert summary["beta"]["missing_ids"] == [0, 1, 2, 3, 4]
        assert len(summary["beta"]["values"]) == 5

    def test_unknown_parameter_rejected(self, tmp_path):
        db = self.make_db(tmp_path)
        with pytest.raises(SchemaError):
            summarize_params(db, range(10), ["gamma"])

    def test_unknown_id_rejected(self, tmp_path):
        db = self.make_db(tmp_path)
        with pytest.raises(ParameterError):
            summarize_params(db, [99], ["population"])
