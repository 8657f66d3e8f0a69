"""Scripted-patient fixtures: drive a whole intake session from a answer table."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Optional

from kom.common import Clock, FixedClock
from kom.llm import LLMClientConfig
from kom.assessment.dialogue import (
    DialogueState,
    attach_imaging,
    ingest_answer,
    start_session,
)
from kom.assessment.report import generate_report


class ScriptedPatient:
    """Answers prompts by matching their key (or text) against regex rules.

    The fixture format is a JSON list of ``{"match": <regex>, "answer": <text>}``
    entries; the first rule whose pattern matches the prompt key or text wins.
    """

    def __init__(self, rules: list[dict]):
        self.rules = [(re.compile(r["match"]), r["answer"]) for r in rules]

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedPatient":
        return cls(json.loads(Path(path).read_text()))

    def answer_for(self, prompt: dict) -> str:
        for pattern, answer in self.rules:
            if pattern.search(prompt.get("key") or "") or pattern.search(prompt["text"]):
                return answer
        raise KeyError(f"script has no answer for prompt {prompt.get('key')!r}")


def default_intake_script(imaging_available: bool = True) -> list[dict]:
    """A complete scripted patient covering every prompt the intake can ask."""
    return [
        {"match": r"^radiographs\.available$", "answer": "yes" if imaging_available else "no"},
        {
            "match": r"^domain\.demographics$",
            "answer": "I am 62 years old, female, BMI is 29.1, 78 kg, 164 cm.",
        },
        {
            "match": r"^domain\.chief-complaint-and-hpi$",
            "answer": "Right knee pain for two years, worse on stairs, morning stiffness under 30 minutes.",
        },
        {
            "match": r"^domain\.past-and-family-history$",
            "answer": "Hypertension, 2 comorbidities overall. Never smoked. No prior knee injury. Mother had knee arthritis.",
        },
        {
            "match": r"^domain\.current-treatment$",
            "answer": "Taking paracetamol occasionally. I am allergic to oral nsaid, and cannot take intraarticular corticosteroid.",
        },
        {
            "match": r"^domain\.psychological-wellbeing$",
            "answer": "Mood is generally fine, some frustration about reduced mobility; no depression.",
        },
        {
            "match": r"^domain\.nutritional-condition$",
            "answer": "Balanced diet, trying to lose weight, low vitamin D last year.",
        },
        {
            "match": r"^domain\.physical-activity$",
            "answer": "I walk 30 minutes daily. Peak knee extension torque 96.0 left and 104.0 right, activity score 140.",
        },
        {
            "match": r"^domain\.socioeconomic-condition$",
            "answer": "Retired teacher, lives with spouse, good insurance coverage.",
        },
        {
            "match": r"^domain\.treatment-goals-and-preferences$",
            "answer": "I want to keep walking daily and avoid surgery if possible; I prefer exercise-based care.",
        },
        {
            "match": r"^domain\.rehabilitation-resources$",
            "answer": "Community pool and a physiotherapy clinic nearby.",
        },
        {"match": r"^koos\.left\.pain\.item", "answer": "1"},
        {"match": r"^koos\.left\.symptoms\.item", "answer": "1"},
        {"match": r"^koos\.left\.adl\.item", "answer": "0"},
        {"match": r"^koos\.left\.sport\.item", "answer": "2"},
        {"match": r"^koos\.left\.qol\.item", "answer": "1"},
        {"match": r"^koos\.right\.pain\.item", "answer": "2"},
        {"match": r"^koos\.right\.symptoms\.item", "answer": "2"},
        {"match": r"^koos\.right\.adl\.item", "answer": "1"},
        {"match": r"^koos\.right\.sport\.item", "answer": "3"},
        {"match": r"^koos\.right\.qol\.item", "answer": "2"},
    ]


def run_scripted_session(
    script: ScriptedPatient,
    llm_config: Optional[LLMClientConfig] = None,
    imaging_findings=None,
    clock: Optional[Clock] = None,
    session_id: Optional[str] = None,
    max_steps: int = 500,
) -> tuple[DialogueState, dict]:
    """Play a full intake: scripted answers, imaging attachment, report."""
    cfg = llm_config or LLMClientConfig(backend="mock", seed=0)
    clock = clock or FixedClock()
    if session_id is None:
        session_id = f"scripted-{cfg.seed}"
    state = start_session(cfg, session_id=session_id, clock=clock)

    steps = 0
    while not state.finished and steps < max_steps:
        steps += 1
        if state.pending.get("kind") == "imaging-wait":
            if imaging_findings is None:
                raise ValueError("session expects imaging findings but none were supplied")
            attach_imaging(state, imaging_findings, clock=clock)
            continue
        prompt = state.current_prompt()
        if prompt is None:
            break
        ingest_answer(state, script.answer_for(prompt), clock=clock)
    if not state.finished:
        raise RuntimeError("scripted session did not finish within the step budget")
    report = generate_report(state, clock=clock)
    return state, report
