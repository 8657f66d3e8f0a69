"""Multidisciplinary team rounds: draft, critique, revise, synthesize."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from kom.therapy.agents import (
    SPECIALIST_ROLES,
    SpecialistAgent,
    assemble_prompt,
    draft_recommendation,
)

_SPECIALISTS = tuple(r for r in SPECIALIST_ROLES if r != "clinical-decision")


class MDTError(RuntimeError):
    def __init__(self, message: str, transcript: Optional["DiscussionTranscript"] = None):
        super().__init__(message)
        self.transcript = transcript


@dataclass
class DiscussionTranscript:
    participants: list
    events: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"participants": list(self.participants), "events": list(self.events)}

    @classmethod
    def from_dict(cls, d: dict) -> "DiscussionTranscript":
        return cls(participants=list(d["participants"]), events=list(d["events"]))


def validate_transcript(transcript: DiscussionTranscript) -> None:
    """Check the event grammar: draft+ (critique revision+)* synthesis."""
    events = transcript.events
    if not events:
        raise ValueError("empty transcript")
    kinds = [e["type"] for e in events]
    if kinds.count("synthesis") != 1 or kinds[-1] != "synthesis":
        raise ValueError("transcript must end with its single synthesis event")
    state = "drafts"
    seen_draft = False
    for kind in kinds[:-1]:
        if state == "drafts":
            if kind == "draft":
                seen_draft = True
            elif kind == "critique" and seen_draft:
                state = "revisions"
                revision_seen = False
            else:
                raise ValueError(f"unexpected {kind!r} while collecting drafts")
        elif state == "revisions":
            if kind == "revision":
                revision_seen = True
            elif kind == "critique" and revision_seen:
                revision_seen = False
            else:
                raise ValueError(f"unexpected {kind!r} during critique/revision rounds")
    if state == "revisions" and not revision_seen:
        raise ValueError("critique without a following revision")
    rounds = [e["round"] for e in events]
    if any(b < a for a, b in zip(rounds, rounds[1:])):
        raise ValueError("round indices must be monotone non-decreasing")


def run_mdt(
    eval_report: dict,
    risk_report: Optional[dict],
    agents: dict[str, SpecialistAgent],
    max_rounds: int = 3,
) -> DiscussionTranscript:
    """Run the discussion to a synthesis event (or fail at the round limit).

    Round structure: specialists draft, the coordinator critiques, specialists
    revise, and the coordinator either approves (emitting the synthesis) or
    critiques again until ``max_rounds`` is exhausted.
    """
    missing = [r for r in SPECIALIST_ROLES if r not in agents]
    if missing:
        raise ValueError(f"missing MDT roles: {missing}")
    coordinator = agents["clinical-decision"]
    transcript = DiscussionTranscript(participants=list(SPECIALIST_ROLES))

    drafts: dict[str, dict] = {}
    round_index = 1
    for role in _SPECIALISTS:
        draft = draft_recommendation(agents[role], eval_report, risk_report, round_index)
        drafts[role] = draft.to_dict()
        transcript.events.append(
            {"type": "draft", "role": role, "round": round_index, "content": drafts[role]}
        )

    while True:
        critique_prompt = assemble_prompt(
            coordinator,
            eval_report,
            risk_report,
            round_index,
            task="critique",
            drafts=list(drafts.values()),
        )
        critique = json.loads(coordinator.llm.complete(critique_prompt))
        if critique.get("approved"):
            # An approving review ends the discussion: it rides along inside
            # the synthesis event so the transcript grammar stays
            # draft+ (critique revision+)* synthesis.
            synth_prompt = assemble_prompt(
                coordinator,
                eval_report,
                risk_report,
                round_index,
                task="synthesize",
                drafts=list(drafts.values()),
            )
            synthesis = json.loads(coordinator.llm.complete(synth_prompt))
            transcript.events.append(
                {
                    "type": "synthesis",
                    "role": "clinical-decision",
                    "round": round_index,
                    "content": {"approval": critique, **synthesis},
                }
            )
            validate_transcript(transcript)
            return transcript
        transcript.events.append(
            {
                "type": "critique",
                "role": "clinical-decision",
                "round": round_index,
                "content": critique,
            }
        )

        round_index += 1
        if round_index > max_rounds:
            raise MDTError(
                f"no synthesis within {max_rounds} rounds", transcript=transcript
            )
        for role in _SPECIALISTS:
            note = critique.get("assessments", {}).get(role, {})
            draft = draft_recommendation(
                agents[role], eval_report, risk_report, round_index, critique=note
            )
            drafts[role] = draft.to_dict()
            transcript.events.append(
                {"type": "revision", "role": role, "round": round_index, "content": drafts[role]}
            )
