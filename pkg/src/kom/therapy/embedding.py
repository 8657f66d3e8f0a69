"""Retrieval embedding surface for the knowledge bases.

The deterministic feature-hashing embedder is the default; a contextual
backend can be plugged in by passing any object with an ``embed(text)``
method returning a unit vector.
"""

from __future__ import annotations

import numpy as np

from kom.embedding import HashEmbedder

EMBEDDING_DIM = 256

_DEFAULT = HashEmbedder(dim=EMBEDDING_DIM)


def get_embedder() -> HashEmbedder:
    return _DEFAULT


def embed(text: str, embedder=None) -> np.ndarray:
    """Unit-norm embedding of non-empty text."""
    if not text or not text.strip():
        raise ValueError("cannot embed empty text")
    return (embedder or _DEFAULT).embed(text)
