"""Deterministic text embedding via signed feature hashing.

This is the fallback retrieval/similarity substrate: no model weights, fully
reproducible, pluggable behind the same interface as a contextual backend.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric runs; punctuation and whitespace are separators."""
    return _TOKEN_RE.findall(text.lower())


class HashEmbedder:
    """Token feature-hashing into a fixed dimension, L2-normalized."""

    def __init__(self, dim: int = 256):
        if dim < 2:
            raise ValueError("embedding dimension must be >= 2")
        self.dim = dim

    def _token_bucket(self, token: str) -> tuple[int, float]:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "big") % self.dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        return bucket, sign

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("cannot embed empty text")
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            bucket, sign = self._token_bucket(token)
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Signed collisions cancelled every bucket; fall back to a
            # deterministic unit vector from the whole text.
            digest = hashlib.sha1(" ".join(tokens).encode("utf-8")).digest()
            vec[int.from_bytes(digest[:4], "big") % self.dim] = 1.0
            norm = 1.0
        return vec / norm

    def embed_tokens(self, text: str) -> np.ndarray:
        """Per-token unit vectors (for greedy token-matching similarity)."""
        tokens = tokenize(text)
        if not tokens:
            raise ValueError("cannot embed empty text")
        out = np.zeros((len(tokens), self.dim), dtype=np.float64)
        for i, token in enumerate(tokens):
            bucket, sign = self._token_bucket(token)
            out[i, bucket] = sign
        return out


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))
