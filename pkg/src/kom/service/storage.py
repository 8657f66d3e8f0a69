"""Append-only JSONL event log with a verifiable audit hash chain."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Optional

from kom.common import Clock, canonical_json, stable_hash

GENESIS_HASH = "0" * 64


class StorageError(RuntimeError):
    pass


def _event_hash(event: dict) -> str:
    core = {k: event[k] for k in ("seq", "timestamp", "actor", "action", "payload_hash", "prev_hash")}
    return hashlib.sha256(canonical_json(core).encode("utf-8")).hexdigest()


def make_event(
    seq: int,
    actor: str,
    action: str,
    payload: dict,
    prev_hash: str,
    clock: Optional[Clock] = None,
) -> dict:
    event = {
        "seq": seq,
        "timestamp": (clock or Clock()).now_iso(),
        "actor": actor,
        "action": action,
        "payload": payload,
        "payload_hash": stable_hash(payload),
        "prev_hash": prev_hash,
    }
    event["hash"] = _event_hash(event)
    return event


def verify_chain(events: list[dict]) -> None:
    """Raise if any event's hash or linkage is inconsistent."""
    prev = GENESIS_HASH
    for i, event in enumerate(events):
        if event["prev_hash"] != prev:
            raise StorageError(f"event {i}: broken chain (prev hash mismatch)")
        if event["payload_hash"] != stable_hash(event["payload"]):
            raise StorageError(f"event {i}: payload hash mismatch")
        if event["hash"] != _event_hash(event):
            raise StorageError(f"event {i}: event hash mismatch")
        prev = event["hash"]


class EventStore:
    """One append-only JSONL file per session under the data directory."""

    def __init__(self, data_dir: str | Path, clock: Optional[Clock] = None):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.clock = clock or Clock()

    def _path(self, session_id: str) -> Path:
        safe = session_id.replace("/", "_")
        return self.data_dir / f"{safe}.jsonl"

    def append(self, session_id: str, actor: str, action: str, payload: dict) -> dict:
        events = self.load(session_id) if self._path(session_id).exists() else []
        prev_hash = events[-1]["hash"] if events else GENESIS_HASH
        event = make_event(len(events), actor, action, payload, prev_hash, clock=self.clock)
        with self._path(session_id).open("a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
        return event

    def load(self, session_id: str) -> list[dict]:
        """All events for a session; a corrupt line fails with its line number."""
        path = self._path(session_id)
        if not path.exists():
            raise StorageError(f"no event log for session {session_id!r}")
        events = []
        for line_no, line in enumerate(path.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StorageError(f"{path.name}: corrupt event at line {line_no}: {exc}") from exc
        verify_chain(events)
        return events

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.data_dir.glob("*.jsonl"))
