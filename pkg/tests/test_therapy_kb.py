"""Knowledge base ingestion, embedding, and retrieval."""

import json

import numpy as np
import pytest

from kom.therapy.embedding import embed
from kom.therapy.kb import ingest_evidence
from kom.therapy.retrieval import retrieve
from kom.therapy.synthetic import make_synthetic_records


def test_ingest_fixture_count():
    records = make_synthetic_records("psychology", 210, seed=0)
    kb, rejects = ingest_evidence(records, domain="psychology")
    assert len(kb) == 210
    assert kb.build_manifest["count"] == 210
    assert rejects == []


def test_ingest_rejects_empty_excerpt():
    records = make_synthetic_records("nutrition", 3, seed=1)
    records[1]["excerpt"] = "   "
    kb, rejects = ingest_evidence(records, domain="nutrition")
    assert len(kb) == 2
    assert len(rejects) == 1 and rejects[0]["reason"] == "empty excerpt"
    assert kb.build_manifest["rejected"] == 1


def test_ingest_duplicate_id_fails_naming_it():
    records = make_synthetic_records("exercise", 2, seed=2)
    records[1]["id"] = records[0]["id"]
    with pytest.raises(ValueError, match=records[0]["id"]):
        ingest_evidence(records, domain="exercise")


def test_ingest_from_jsonl_file(tmp_path):
    records = make_synthetic_records("guideline", 5, seed=3)
    path = tmp_path / "guideline.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in records))
    kb, rejects = ingest_evidence(path, domain="guideline")
    assert len(kb) == 5
    assert kb.build_manifest["source_hash"] is not None


def test_ingest_corrupt_line_reports_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "domain": "exercise", "excerpt": "x"}\n{broken\n')
    with pytest.raises(ValueError, match=":2:"):
        ingest_evidence(path, domain="exercise")


def test_embed_deterministic_unit():
    a = embed("quadriceps strengthening program")
    b = embed("quadriceps strengthening program")
    np.testing.assert_array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1.0) <= 1e-9


def test_embed_empty_rejected():
    with pytest.raises(ValueError):
        embed("  ")


def test_retrieve_self_hit_rank_one():
    records = make_synthetic_records("exercise", 50, seed=4)
    kb, _ = ingest_evidence(records, domain="exercise")
    target = kb.entries[17]
    results = retrieve(kb, target.excerpt, k=3)
    assert results[0][0].id == target.id
    assert results[0][1] == pytest.approx(1.0, abs=1e-9)


def test_retrieve_k_larger_than_kb():
    records = make_synthetic_records("nutrition", 4, seed=5)
    kb, _ = ingest_evidence(records, domain="nutrition")
    assert len(retrieve(kb, "protein intake", k=100)) == 4


def test_retrieve_tie_breaks_by_id():
    records = [
        {"id": "b-dup", "domain": "exercise", "title": "t", "source": "s", "year": 2000,
         "excerpt": "identical excerpt text"},
        {"id": "a-dup", "domain": "exercise", "title": "t", "source": "s", "year": 2000,
         "excerpt": "identical excerpt text"},
    ]
    # identical excerpts share an embedding; ascending id breaks the tie
    kb, _ = ingest_evidence(records, domain="exercise")
    results = retrieve(kb, "identical excerpt text", k=2)
    assert [r[0].id for r in results] == ["a-dup", "b-dup"]


def test_retrieve_empty_kb_errors():
    kb, _ = ingest_evidence([], domain="exercise")
    with pytest.raises(ValueError):
        retrieve(kb, "anything", k=1)


def test_retrieval_is_pure_over_unchanged_kb():
    records = make_synthetic_records("rehabilitation", 30, seed=6)
    kb, _ = ingest_evidence(records, domain="rehabilitation")
    a = retrieve(kb, "balance and gait training", k=5)
    b = retrieve(kb, "balance and gait training", k=5)
    assert [(e.id, s) for e, s in a] == [(e.id, s) for e, s in b]


def test_entries_are_immutable():
    records = make_synthetic_records("psychology", 3, seed=7)
    kb, _ = ingest_evidence(records, domain="psychology")
    with pytest.raises(Exception):
        kb.entries[0].excerpt = "changed"
    assert isinstance(kb.entries, tuple)
