"""Shared plumbing: canonical JSON, hashing, clocks, and seeded RNG helpers."""

from __future__ import annotations

import hashlib
import json
import random
from datetime import datetime, timezone
from typing import Any, Callable

import numpy as np


def canonical_json(obj: Any) -> str:
    """Serialize to a stable, compact JSON string (sorted keys, no whitespace)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def stable_hash(obj: Any) -> str:
    """SHA-256 hex digest of an object's canonical JSON form."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def text_hash(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


class Clock:
    """Injectable time source. The default reads the wall clock."""

    def now_iso(self) -> str:
        return datetime.now(timezone.utc).isoformat()

    def monotonic(self) -> float:
        import time

        return time.monotonic()


class FixedClock(Clock):
    """Clock frozen at a given instant; ``monotonic`` advances by a fixed step per call."""

    def __init__(self, iso: str = "2025-01-01T00:00:00+00:00", step: float = 1.0):
        self._iso = iso
        self._step = step
        self._ticks = 0.0

    def now_iso(self) -> str:
        return self._iso

    def monotonic(self) -> float:
        self._ticks += self._step
        return self._ticks


def seeded_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def derive_seed(master_seed: int, *parts: Any) -> int:
    """Stable child seed derived from a master seed and context labels."""
    digest = hashlib.sha256(canonical_json([master_seed, list(parts)]).encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**31 - 1)


def seed_everything(seed: int) -> None:
    """Seed Python, NumPy and (if present) torch global RNGs."""
    random.seed(seed)
    np.random.seed(seed % (2**32 - 1))
    try:
        import torch

        torch.manual_seed(seed)
    except ImportError:
        pass


IdFactory = Callable[[], str]


def sequential_ids(prefix: str) -> IdFactory:
    """Deterministic id factory: ``prefix-0001``, ``prefix-0002``, ..."""
    counter = {"n": 0}

    def make() -> str:
        counter["n"] += 1
        return f"{prefix}-{counter['n']:04d}"

    return make


def uuid_ids() -> IdFactory:
    import uuid

    return lambda: str(uuid.uuid4())
