"""Synthetic evidence corpora for desk-scale knowledge bases."""

from __future__ import annotations

import json
from pathlib import Path

from kom.common import seeded_rng

_TOPIC_WORDS = {
    "psychology": ["coping", "mood", "cbt", "resilience", "pacing", "anxiety", "sleep"],
    "nutrition": ["protein", "vitamin", "calorie", "mediterranean", "fiber", "omega3", "weight"],
    "surgery-medication": ["nsaid", "arthroplasty", "injection", "analgesia", "osteotomy", "dosing"],
    "rehabilitation": ["physiotherapy", "mobilization", "balance", "gait", "proprioception"],
    "exercise": ["quadriceps", "aerobic", "resistance", "aquatic", "stretching", "cycling"],
    "guideline": ["recommendation", "firstline", "stepped", "care", "consensus", "grade"],
}


def make_synthetic_records(domain: str, n: int, seed: int = 0) -> list[dict]:
    """Evidence records for one domain with pairwise-distinct embeddings.

    Excerpts differ by a per-entry marker token; because feature hashing can
    collide, any excerpt whose embedding duplicates an earlier one gets an
    extra disambiguating token (deterministically) until it is unique.
    """
    from kom.therapy.embedding import embed

    rng = seeded_rng(seed)
    words = _TOPIC_WORDS[domain]
    records = []
    seen: set[bytes] = set()
    for i in range(n):
        picked = [words[int(k)] for k in rng.integers(0, len(words), size=3)]
        base = (
            f"entry{domain.replace('-', '')}{i:05d} study of {picked[0]} and {picked[1]} "
            f"with {picked[2]} for knee osteoarthritis; results support its use."
        )
        excerpt = base
        bump = 0
        key = embed(excerpt).tobytes()
        while key in seen:
            bump += 1
            excerpt = f"{base} marker{domain.replace('-', '')}{i:05d}x{bump}"
            key = embed(excerpt).tobytes()
        seen.add(key)
        records.append(
            {
                "id": f"{domain}-{i:05d}",
                "domain": domain,
                "title": f"{domain.title()} finding {i}",
                "source": f"Synth Journal {1990 + int(rng.integers(0, 35))}",
                "year": 1990 + int(rng.integers(0, 35)),
                "excerpt": excerpt,
            }
        )
    return records


def write_synthetic_kb_files(
    directory: str | Path,
    counts: dict[str, int] | None = None,
    seed: int = 0,
) -> dict[str, Path]:
    """Write one JSONL corpus file per domain; returns domain -> path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    counts = counts or {
        "psychology": 210,
        "nutrition": 349,
        "surgery-medication": 80,
        "rehabilitation": 90,
        "exercise": 95,
        "guideline": 60,
    }
    paths = {}
    for i, (domain, n) in enumerate(sorted(counts.items())):
        path = directory / f"{domain}.jsonl"
        with path.open("w") as fh:
            for record in make_synthetic_records(domain, n, seed=seed + i):
                fh.write(json.dumps(record) + "\n")
        paths[domain] = path
    return paths


def load_synthetic_kbs(counts: dict[str, int] | None = None, seed: int = 0) -> dict:
    """In-memory knowledge bases for each domain (no files involved)."""
    from kom.therapy.kb import ingest_evidence

    counts = counts or {
        "psychology": 40,
        "nutrition": 40,
        "surgery-medication": 40,
        "rehabilitation": 40,
        "exercise": 40,
        "guideline": 30,
    }
    kbs = {}
    for i, (domain, n) in enumerate(sorted(counts.items())):
        kb, rejects = ingest_evidence(make_synthetic_records(domain, n, seed=seed + i), domain=domain)
        if rejects:
            raise RuntimeError(f"synthetic corpus for {domain} rejected records: {rejects}")
        kbs[domain] = kb
    return kbs
