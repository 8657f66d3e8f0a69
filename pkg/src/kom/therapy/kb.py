"""Evidence corpus ingestion into immutable, retrieval-ready knowledge bases."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from kom.common import text_hash
from kom.therapy.embedding import embed

KB_DOMAINS = (
    "psychology",
    "nutrition",
    "surgery-medication",
    "rehabilitation",
    "exercise",
    "guideline",
)


@dataclass(frozen=True)
class EvidenceEntry:
    id: str
    domain: str
    title: str
    source: str
    year: int
    excerpt: str
    embedding: np.ndarray

    def __post_init__(self):
        if not self.excerpt:
            raise ValueError("excerpt must be non-empty")
        norm = float(np.linalg.norm(self.embedding))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"embedding norm {norm} != 1")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain,
            "title": self.title,
            "source": self.source,
            "year": self.year,
            "excerpt": self.excerpt,
        }


@dataclass(frozen=True)
class KnowledgeBase:
    domain: str
    entries: tuple
    build_manifest: dict

    def __len__(self) -> int:
        return len(self.entries)

    def by_id(self, entry_id: str) -> Optional[EvidenceEntry]:
        return self._index().get(entry_id)

    def _index(self) -> dict:
        cache = getattr(self, "_id_cache", None)
        if cache is None:
            cache = {e.id: e for e in self.entries}
            object.__setattr__(self, "_id_cache", cache)
        return cache

    def matrix(self) -> np.ndarray:
        cache = getattr(self, "_matrix_cache", None)
        if cache is None:
            cache = np.stack([e.embedding for e in self.entries]) if self.entries else np.zeros((0, 0))
            object.__setattr__(self, "_matrix_cache", cache)
        return cache


def ingest_evidence(
    source: str | Path | Iterable[dict],
    domain: Optional[str] = None,
    embedder=None,
) -> tuple[KnowledgeBase, list[dict]]:
    """Read JSONL records (or dicts), embed excerpts, build an immutable KB.

    Records with empty excerpts are rejected (with reasons in the report);
    duplicate ids abort the ingest. Returns (kb, rejects).
    """
    raw_bytes = None
    if isinstance(source, (str, Path)):
        path = Path(source)
        raw_bytes = path.read_bytes()
        records = []
        for line_no, line in enumerate(raw_bytes.decode("utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
    else:
        records = list(source)

    rejects: list[dict] = []
    entries: list[EvidenceEntry] = []
    seen_ids: set[str] = set()
    for i, record in enumerate(records):
        entry_id = record.get("id")
        if not entry_id:
            rejects.append({"index": i, "reason": "missing id"})
            continue
        if entry_id in seen_ids:
            raise ValueError(f"duplicate evidence id: {entry_id!r}")
        record_domain = record.get("domain", domain)
        if domain is not None and record_domain != domain:
            rejects.append({"index": i, "id": entry_id, "reason": f"domain {record_domain!r} != {domain!r}"})
            continue
        if record_domain not in KB_DOMAINS:
            rejects.append({"index": i, "id": entry_id, "reason": f"unknown domain {record_domain!r}"})
            continue
        excerpt = (record.get("excerpt") or "").strip()
        if not excerpt:
            rejects.append({"index": i, "id": entry_id, "reason": "empty excerpt"})
            continue
        seen_ids.add(entry_id)
        entries.append(
            EvidenceEntry(
                id=entry_id,
                domain=record_domain,
                title=record.get("title", ""),
                source=record.get("source", ""),
                year=int(record.get("year", 0)),
                excerpt=excerpt,
                embedding=embed(excerpt, embedder),
            )
        )

    kb_domain = domain or (entries[0].domain if entries else "guideline")
    manifest = {
        "domain": kb_domain,
        "count": len(entries),
        "rejected": len(rejects),
        "source_hash": text_hash(raw_bytes) if raw_bytes is not None else None,
    }
    return KnowledgeBase(domain=kb_domain, entries=tuple(entries), build_manifest=manifest), rejects
