"""The intake dialogue state machine.

Each session is an isolated, serializable state. The conversation runs:
radiograph availability, the ten prompted domains (with follow-ups for
missing structured fields), the KOOS questionnaire for both knees, and the
imaging attachment (or its decline). Terminology questions get glossary
answers without advancing the flow.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from kom.common import Clock, uuid_ids
from kom.llm import LLMClientConfig
from kom.assessment.domains import (
    GLOSSARY,
    PROMPTED_DOMAINS,
    DomainStatus,
    IntakeDomain,
    advance_status,
)
from kom.assessment.extract import (
    REQUIRED_FIELDS,
    extract_for_domain,
    is_decline,
    parse_yes_no,
)
from kom.assessment.koos import KoosFlow

_DOMAIN_PROMPTS = {
    IntakeDomain.DEMOGRAPHICS: "Please tell me your age, sex, and BMI (plus weight and height if known).",
    IntakeDomain.CHIEF_COMPLAINT: "What brings you in today? Describe your knee symptoms and how they began.",
    IntakeDomain.PAST_FAMILY_HISTORY: "Any past medical problems, knee injuries, surgeries, or family history of arthritis? Do you smoke?",
    IntakeDomain.CURRENT_TREATMENT: "What treatments or medications are you currently using? Any drug allergies or medications you cannot take?",
    IntakeDomain.PSYCHOLOGICAL_WELLBEING: "How is your mood and stress level? Has the knee problem affected you emotionally?",
    IntakeDomain.NUTRITIONAL_CONDITION: "Describe your typical diet and any nutritional concerns.",
    IntakeDomain.PHYSICAL_ACTIVITY: "Describe your physical activity. If measured, include your peak knee extension torque (left then right) and activity score.",
    IntakeDomain.SOCIOECONOMIC_CONDITION: "What is your work and living situation? Any constraints on accessing care?",
    IntakeDomain.TREATMENT_GOALS: "What are your goals and preferences for treatment?",
    IntakeDomain.REHABILITATION_RESOURCES: "What rehabilitation resources can you access (gym, pool, physiotherapy)?",
}

_CLARIFY_RE = re.compile(
    r"(?:what (?:is|does|are)|explain|meaning of|don't understand)\s+(?:an?\s+|the\s+)?([\w\s\-]+?)(?:\s*mean)?\s*\??\s*$",
    re.I,
)


@dataclass
class DialogueState:
    session_id: str
    llm_config: LLMClientConfig
    turns: list = field(default_factory=list)
    domain_status: dict = field(default_factory=dict)
    extracted: dict = field(default_factory=dict)
    imaging_available: Optional[bool] = None
    finished: bool = False
    pending: dict = field(default_factory=dict)
    koos_flow: Optional[KoosFlow] = None
    koos_declined: bool = False
    audit: list = field(default_factory=list)

    def current_prompt(self) -> Optional[dict]:
        for turn in reversed(self.turns):
            if turn["speaker"] == "agent" and turn.get("key"):
                return {"key": turn["key"], "text": turn["text"]}
        return None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "llm_config": {
                "backend": self.llm_config.backend,
                "endpoint": self.llm_config.endpoint,
                "temperature": self.llm_config.temperature,
                "timeout_s": self.llm_config.timeout_s,
                "seed": self.llm_config.seed,
            },
            "turns": list(self.turns),
            "domain_status": dict(self.domain_status),
            "extracted": self.extracted,
            "imaging_available": self.imaging_available,
            "finished": self.finished,
            "pending": self.pending,
            "koos_flow": None
            if self.koos_flow is None
            else {
                "side": self.koos_flow.side,
                "responses": self.koos_flow.responses,
                "scores": self.koos_flow.scores,
                "subscale_idx": self.koos_flow._subscale_idx,
                "item_idx": self.koos_flow._item_idx,
            },
            "koos_declined": self.koos_declined,
            "audit": list(self.audit),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DialogueState":
        kf = d.get("koos_flow")
        flow = None
        if kf is not None:
            flow = KoosFlow(side=kf["side"], responses=kf["responses"], scores=kf["scores"])
            flow._subscale_idx = kf["subscale_idx"]
            flow._item_idx = kf["item_idx"]
        return cls(
            session_id=d["session_id"],
            llm_config=LLMClientConfig(**d["llm_config"]),
            turns=list(d["turns"]),
            domain_status=dict(d["domain_status"]),
            extracted=d["extracted"],
            imaging_available=d["imaging_available"],
            finished=d["finished"],
            pending=d["pending"],
            koos_flow=flow,
            koos_declined=d["koos_declined"],
            audit=list(d["audit"]),
        )


def _say(state: DialogueState, text: str, key: Optional[str] = None, clock: Optional[Clock] = None) -> None:
    state.turns.append(
        {
            "speaker": "agent",
            "text": text,
            "key": key,
            "timestamp": (clock or Clock()).now_iso(),
        }
    )


def _hear(state: DialogueState, text: str, clock: Optional[Clock] = None) -> None:
    state.turns.append(
        {"speaker": "patient", "text": text, "key": None, "timestamp": (clock or Clock()).now_iso()}
    )


def start_session(
    cfg: LLMClientConfig,
    session_id: Optional[str] = None,
    clock: Optional[Clock] = None,
) -> DialogueState:
    """Fresh session: all domains missing, first prompt asks about radiographs."""
    state = DialogueState(
        session_id=session_id or uuid_ids()(),
        llm_config=cfg,
        domain_status={d.value: DomainStatus.MISSING.value for d in IntakeDomain},
        pending={"kind": "radiographs"},
    )
    _say(
        state,
        "Welcome. Are bilateral knee anteroposterior radiographs (X-rays of both knees) available? (yes/no)",
        key="radiographs.available",
        clock=clock,
    )
    return state


def assess_completeness(state: DialogueState) -> list[IntakeDomain]:
    """Domains still missing or only partially collected."""
    return [
        d
        for d in IntakeDomain
        if state.domain_status[d.value]
        in (DomainStatus.MISSING.value, DomainStatus.PARTIAL.value)
    ]


def _set_status(state: DialogueState, domain: IntakeDomain, proposed: DomainStatus) -> None:
    current = DomainStatus(state.domain_status[domain.value])
    state.domain_status[domain.value] = advance_status(current, proposed).value


def _koos_outstanding(state: DialogueState) -> bool:
    if state.koos_declined:
        return False
    koos = state.extracted.get("koos", {})
    return state.koos_flow is not None or "left" not in koos or "right" not in koos


def _maybe_finish(state: DialogueState, clock: Optional[Clock]) -> None:
    koos_done = not _koos_outstanding(state)
    if not assess_completeness(state) and koos_done and state.pending.get("kind") != "koos":
        if not state.finished:
            state.finished = True
            _say(state, "Thank you. The intake is complete; your report is being prepared.", key="session.finished", clock=clock)


def _advance(state: DialogueState, clock: Optional[Clock]) -> None:
    """Emit the next prompt based on what is still outstanding."""
    for domain in PROMPTED_DOMAINS:
        status = state.domain_status[domain.value]
        if status == DomainStatus.MISSING.value:
            state.pending = {"kind": "domain", "domain": domain.value}
            _say(state, _DOMAIN_PROMPTS[domain], key=f"domain.{domain.value}", clock=clock)
            return
        if status == DomainStatus.PARTIAL.value:
            missing = _missing_fields(state, domain)
            state.pending = {"kind": "domain", "domain": domain.value}
            _say(
                state,
                f"Could you also provide: {', '.join(missing)}?",
                key=f"domain.{domain.value}.followup",
                clock=clock,
            )
            return

    if _koos_outstanding(state):
        if state.koos_flow is None:
            koos = state.extracted.get("koos", {})
            next_side = "left" if "left" not in koos else "right"
            state.koos_flow = KoosFlow(side=next_side)
            if not koos:
                _say(
                    state,
                    "I will now guide you through the KOOS questionnaire for each knee. Say 'decline' to skip.",
                    key="koos.intro",
                    clock=clock,
                )
        prompt = state.koos_flow.current_prompt()
        state.pending = {"kind": "koos"}
        _say(state, prompt["text"], key=prompt["key"], clock=clock)
        return

    if state.imaging_available and state.domain_status[
        IntakeDomain.RADIOGRAPHIC_FINDINGS.value
    ] not in (DomainStatus.COMPLETE.value, DomainStatus.DECLINED.value):
        state.pending = {"kind": "imaging-wait"}
        _say(
            state,
            "Awaiting radiograph analysis; the imaging findings will be attached to your record.",
            key="imaging.pending",
            clock=clock,
        )
        return

    state.pending = {"kind": "done"}
    _maybe_finish(state, clock)


def _missing_fields(state: DialogueState, domain: IntakeDomain) -> list[str]:
    required = REQUIRED_FIELDS.get(domain, ())
    section = state.extracted.get(domain.value, {})
    return [f for f in required if f not in section]


def _handle_clarification(state: DialogueState, text: str, clock: Optional[Clock]) -> bool:
    match = _CLARIFY_RE.search(text.strip())
    if not match:
        return False
    term = match.group(1).strip().lower()
    for key, definition in GLOSSARY.items():
        if key in term:
            _say(state, definition, key="clarification", clock=clock)
            previous = state.pending
            # Re-issue the outstanding prompt so the flow continues unchanged.
            if previous.get("kind") == "koos" and state.koos_flow is not None:
                prompt = state.koos_flow.current_prompt()
                _say(state, prompt["text"], key=prompt["key"], clock=clock)
            elif previous.get("kind") == "domain":
                domain = IntakeDomain(previous["domain"])
                _say(state, _DOMAIN_PROMPTS[domain], key=f"domain.{domain.value}", clock=clock)
            elif previous.get("kind") == "radiographs":
                _say(
                    state,
                    "Are bilateral knee anteroposterior radiographs available? (yes/no)",
                    key="radiographs.available",
                    clock=clock,
                )
            return True
    return False


def _extract_fields(state: DialogueState, domain: IntakeDomain, text: str) -> dict:
    """Field extraction via the configured backend.

    The remote path may raise a typed transient error; callers invoke it
    before touching the state so a failure leaves the session unchanged.
    """
    if state.llm_config.backend == "remote":
        import json

        from kom.llm import RemoteLLMClient, TransientLLMError

        client = RemoteLLMClient(state.llm_config)
        prompt = (
            "Extract structured intake fields as a flat JSON object for the "
            f"clinical domain '{domain.value}' from this patient answer:\n{text}"
        )
        raw = client.complete(prompt)
        try:
            fields = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TransientLLMError(f"unparseable extraction response: {exc}") from exc
        if not isinstance(fields, dict):
            raise TransientLLMError("extraction response is not a JSON object")
        return fields
    return extract_for_domain(domain, text)


def ingest_answer(state: DialogueState, text: str, clock: Optional[Clock] = None) -> DialogueState:
    """Process one patient answer and move the dialogue forward."""
    if state.finished:
        raise ValueError("session already finished")

    # Run fallible extraction before any mutation so a backend failure
    # leaves the state untouched.
    prefetched_fields: Optional[dict] = None
    if state.pending.get("kind") == "domain" and text.strip() and not is_decline(text):
        domain = IntakeDomain(state.pending["domain"])
        if not _CLARIFY_RE.search(text.strip()):
            prefetched_fields = _extract_fields(state, domain, text)

    _hear(state, text, clock=clock)

    if not text.strip():
        prompt = state.current_prompt()
        if prompt:
            _say(state, prompt["text"], key=prompt["key"], clock=clock)
        return state

    if _handle_clarification(state, text, clock):
        return state

    kind = state.pending.get("kind")
    if kind == "radiographs":
        answer = parse_yes_no(text)
        if answer is None:
            _say(
                state,
                "Sorry, I need a yes or no: are bilateral knee radiographs available?",
                key="radiographs.available",
                clock=clock,
            )
            return state
        state.imaging_available = answer
        if not answer:
            _set_status(state, IntakeDomain.RADIOGRAPHIC_FINDINGS, DomainStatus.DECLINED)
        _advance(state, clock)
        return state

    if kind == "domain":
        domain = IntakeDomain(state.pending["domain"])
        if is_decline(text):
            _set_status(state, domain, DomainStatus.DECLINED)
            _advance(state, clock)
            return state
        fields = prefetched_fields if prefetched_fields is not None else extract_for_domain(domain, text)
        section = state.extracted.setdefault(domain.value, {})
        if domain == IntakeDomain.CURRENT_TREATMENT and "contraindications" in fields:
            merged = list(dict.fromkeys(section.get("contraindications", []) + fields.pop("contraindications")))
            section["contraindications"] = merged
        section.update(fields)
        notes = section.get("narrative", "")
        section["narrative"] = (notes + "\n" + text).strip() if notes else text.strip()
        if _missing_fields(state, domain):
            _set_status(state, domain, DomainStatus.PARTIAL)
        else:
            _set_status(state, domain, DomainStatus.COMPLETE)
        _advance(state, clock)
        return state

    if kind == "koos":
        flow = state.koos_flow
        if is_decline(text):
            state.koos_declined = True
            state.koos_flow = None
            _advance(state, clock)
            return state
        result = flow.submit(text)
        if result["reprompt"]:
            prompt = flow.current_prompt()
            _say(
                state,
                "Please answer with a whole number from 0 to 4. " + prompt["text"],
                key=prompt["key"],
                clock=clock,
            )
            return state
        if flow.done:
            koos = state.extracted.setdefault("koos", {})
            koos[flow.side] = flow.scores
            if flow.side == "left":
                state.koos_flow = KoosFlow(side="right")
            else:
                state.koos_flow = None
        _advance(state, clock)
        return state

    if kind == "imaging-wait":
        _say(
            state,
            "Still waiting for the radiograph analysis to be attached.",
            key="imaging.pending",
            clock=clock,
        )
        return state

    _maybe_finish(state, clock)
    return state


def guide_koos(state: DialogueState, clock: Optional[Clock] = None) -> DialogueState:
    """Start the KOOS questionnaire immediately (if scores are absent)."""
    if "koos" in state.extracted:
        raise ValueError("KOOS scores already collected")
    if state.koos_flow is None:
        state.koos_flow = KoosFlow(side="left")
    prompt = state.koos_flow.current_prompt()
    state.pending = {"kind": "koos"}
    _say(state, prompt["text"], key=prompt["key"], clock=clock)
    return state


def attach_imaging(state: DialogueState, findings, clock: Optional[Clock] = None) -> DialogueState:
    """Attach imaging findings; completes the radiographic-findings domain.

    A second attachment overwrites the first and logs an audit event.
    """
    from kom.imaging.types import ImagingFindings

    if state.imaging_available is not True:
        raise ValueError("imaging was not declared available for this session")
    if isinstance(findings, dict):
        findings = ImagingFindings.from_dict(findings)

    replacing = "imaging" in state.extracted
    state.extracted["imaging"] = findings.to_dict()
    state.extracted["radiographic"] = _findings_to_features(findings)
    _set_status(state, IntakeDomain.RADIOGRAPHIC_FINDINGS, DomainStatus.COMPLETE)
    state.audit.append(
        {
            "action": "imaging-attached" if not replacing else "imaging-replaced",
            "study_id": findings.study_id,
            "timestamp": (clock or Clock()).now_iso(),
        }
    )
    if state.pending.get("kind") in ("imaging-wait", "done"):
        _advance(state, clock)
    return state


def _findings_to_features(findings) -> dict:
    """Flatten per-knee findings into the tabular radiographic feature fields."""
    out: dict = {}
    for side, knee in findings.knees.items():
        out[f"kl_grade_{side}"] = float(knee.kl_estimate)
        grades = {f.feature: f.grade for f in knee.features}
        out[f"jsn_medial_{side}"] = float(grades.get("jsn-medial", 0))
        out[f"jsn_lateral_{side}"] = float(grades.get("jsn-lateral", 0))
        out[f"osteophyte_score_{side}"] = float(
            sum(grades.get(k, 0) for k in grades if k.startswith("osteophyte"))
        )
        out[f"sclerosis_score_{side}"] = float(
            sum(grades.get(k, 0) for k in grades if k.startswith("sclerosis"))
        )
    return out
