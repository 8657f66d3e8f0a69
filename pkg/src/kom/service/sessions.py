"""Pipeline session state and its event-sourced transitions.

Events carry full resulting documents/state, so replaying a log reproduces
exactly the state that incremental application built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

STAGES = ("intake", "imaging", "risk", "therapy", "done")

DOCUMENT_KINDS = ("report", "imaging", "risk-report", "plan")

# Which pipeline stage produces each document.
DOCUMENT_STAGE = {
    "report": "intake",
    "imaging": "imaging",
    "risk-report": "risk",
    "plan": "therapy",
}


class StageError(RuntimeError):
    pass


@dataclass
class PipelineSession:
    session_id: str
    mode: str = "sequential"  # or "independent"
    stage: str = "intake"
    documents: dict = field(default_factory=dict)  # kind -> document
    versions: dict = field(default_factory=dict)  # kind -> int
    edit_log: list = field(default_factory=list)
    dialogue_state: Optional[dict] = None
    created_at: str = ""

    def stage_index(self) -> int:
        return STAGES.index(self.stage)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode,
            "stage": self.stage,
            "documents": self.documents,
            "versions": dict(self.versions),
            "edit_log": list(self.edit_log),
            "dialogue_state": self.dialogue_state,
            "created_at": self.created_at,
        }


def apply_event(session: Optional[PipelineSession], event: dict) -> PipelineSession:
    """Apply one stored event; the same function serves live updates and replay."""
    action = event["action"]
    payload = event["payload"]

    if action == "created":
        return PipelineSession(
            session_id=payload["session_id"],
            mode=payload.get("mode", "sequential"),
            created_at=event["timestamp"],
        )
    if session is None:
        raise StageError("first event must be 'created'")

    if action == "dialogue-updated":
        session.dialogue_state = payload["dialogue_state"]
    elif action == "document-set":
        kind = payload["kind"]
        session.documents[kind] = payload["document"]
        session.versions[kind] = payload["version"]
    elif action == "document-edited":
        kind = payload["kind"]
        session.documents[kind] = payload["document"]
        session.versions[kind] = payload["version"]
        session.edit_log.append(
            {
                "stage": DOCUMENT_STAGE[kind],
                "editor": event["actor"],
                "diff": payload["diff"],
                "timestamp": event["timestamp"],
                "approved": False,
            }
        )
    elif action == "approved":
        stage = payload["stage"]
        next_stage = payload["next_stage"]
        for entry in session.edit_log:
            if entry["stage"] == stage:
                entry["approved"] = True
        session.stage = next_stage
    elif action == "note":
        pass  # audit-only event
    else:
        raise StageError(f"unknown event action {action!r}")
    return session


def replay(events: list[dict]) -> PipelineSession:
    session: Optional[PipelineSession] = None
    for event in events:
        session = apply_event(session, event)
    if session is None:
        raise StageError("no events to replay")
    return session


def next_stage(stage: str) -> str:
    idx = STAGES.index(stage)
    if idx >= len(STAGES) - 1:
        return stage
    return STAGES[idx + 1]
