"""Cosine-similarity retrieval over a knowledge base."""

from __future__ import annotations

from kom.therapy.embedding import embed
from kom.therapy.kb import EvidenceEntry, KnowledgeBase


def retrieve(
    kb: KnowledgeBase, query: str, k: int = 5, embedder=None
) -> list[tuple[EvidenceEntry, float]]:
    """Top-k entries by cosine similarity, ties broken by ascending id.

    Requesting more results than the KB holds returns everything.
    """
    if len(kb) == 0:
        raise ValueError(f"knowledge base {kb.domain!r} is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    query_vec = embed(query, embedder)
    scores = kb.matrix() @ query_vec
    order = sorted(range(len(kb)), key=lambda i: (-scores[i], kb.entries[i].id))
    top = order[: min(k, len(kb))]
    return [(kb.entries[i], float(scores[i])) for i in top]
