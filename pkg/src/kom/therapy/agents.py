"""Specialist agents: prompt assembly, mock backend, draft validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from kom.llm import LLMClient, LLMClientConfig, LLMError, TransientLLMError
from kom.therapy.kb import KnowledgeBase
from kom.therapy.retrieval import retrieve

SPECIALIST_ROLES = (
    "exercise-prescriptionist",
    "surgery-medication",
    "nutrition-psychology",
    "clinical-decision",
)

FITT_VP_FIELDS = ("frequency", "intensity", "time", "type", "volume", "progression")
ABCMV_PRINCIPLES = ("adequacy", "balance", "calorie-control", "moderation", "variety")

_CONTEXT_OPEN = "<CONTEXT>"
_CONTEXT_CLOSE = "</CONTEXT>"


def fitt_vp_validator(draft: "DraftRecommendation") -> list[str]:
    """Missing or empty FITT-VP fields in the draft's exercise section."""
    exercise = draft.sections.get("exercise", {})
    return [f for f in FITT_VP_FIELDS if not str(exercise.get(f) or "").strip()]


def abcmv_validator(draft: "DraftRecommendation") -> list[str]:
    """ABCMV principles the nutrition section leaves unaddressed."""
    nutrition = draft.sections.get("nutrition", {})
    return [p for p in ABCMV_PRINCIPLES if not str(nutrition.get(p) or "").strip()]


ROLE_VALIDATORS = {
    "exercise-prescriptionist": fitt_vp_validator,
    "nutrition-psychology": abcmv_validator,
}


@dataclass
class DraftRecommendation:
    role: str
    round: int
    sections: dict
    citations: list
    interventions: list

    def to_dict(self) -> dict:
        return {
            "role": self.role,
            "round": self.round,
            "sections": self.sections,
            "citations": list(self.citations),
            "interventions": list(self.interventions),
        }


@dataclass
class SpecialistAgent:
    """One role with its knowledge bases and language-model client."""

    role: str
    kbs: dict  # kb domain -> KnowledgeBase (always includes "guideline")
    llm: LLMClient
    llm_config: LLMClientConfig = field(default_factory=lambda: LLMClientConfig(backend="mock"))
    top_k: int = 3

    def __post_init__(self):
        if self.role not in SPECIALIST_ROLES:
            raise ValueError(f"unknown role: {self.role}")
        if not self.kbs:
            raise ValueError("agent needs at least one knowledge base")
        if "guideline" not in self.kbs:
            raise ValueError("the shared guideline knowledge base must be accessible")

    def kb_ids(self) -> set[str]:
        return {e.id for kb in self.kbs.values() for e in kb.entries}


def patient_context(eval_report: dict, risk_report: Optional[dict]) -> dict:
    """Distil the two upstream reports into the fields agents reason over."""
    profile = eval_report.get("patient_profile", {})
    severity = "Mild"
    imaging = eval_report.get("imaging") or {}
    knees = imaging.get("knees") or {}
    ranks = {"NoneDoubt": 0, "Mild": 1, "Moderate": 2, "Severe": 3}
    if knees:
        worst = max((k.get("severity", "Mild") for k in knees.values()), key=lambda s: ranks.get(s, 1))
        severity = worst
    risk_factors = []
    if risk_report:
        for task in sorted(risk_report.get("tasks", {})):
            section = risk_report["tasks"][task]
            for entry in section.get("top_negative") or []:
                risk_factors.append(entry["feature"])
    return {
        "severity": severity,
        "contraindications": profile.get("contraindications", []),
        "preferences": (profile.get("narratives") or {}).get("treatment-goals-and-preferences", ""),
        "risk_factors": sorted(set(risk_factors)),
        "bmi": (profile.get("demographics") or {}).get("bmi"),
    }


def _retrieval_queries(role: str, context: dict) -> list[str]:
    severity = context["severity"]
    if role == "exercise-prescriptionist":
        return [f"exercise program knee osteoarthritis {severity}", "rehabilitation progression"]
    if role == "surgery-medication":
        return [f"medication knee osteoarthritis {severity}", "surgical indication knee"]
    if role == "nutrition-psychology":
        return ["nutrition weight management osteoarthritis", "psychological support chronic pain"]
    return ["clinical practice guideline knee osteoarthritis management"]


def assemble_prompt(
    agent: SpecialistAgent,
    eval_report: dict,
    risk_report: Optional[dict],
    round_index: int,
    task: str = "draft",
    critique: Optional[dict] = None,
    drafts: Optional[list[dict]] = None,
) -> str:
    """Prompt with a machine-readable context block; both backends parse alike."""
    context = patient_context(eval_report, risk_report)
    evidence = []
    for query in _retrieval_queries(agent.role, context):
        for kb in sorted(agent.kbs.values(), key=lambda kb: kb.domain):
            if len(kb) == 0:
                continue
            for entry, score in retrieve(kb, query, k=agent.top_k):
                evidence.append({"id": entry.id, "title": entry.title, "excerpt": entry.excerpt[:240]})
    seen = set()
    evidence = [e for e in evidence if not (e["id"] in seen or seen.add(e["id"]))]

    payload = {
        "task": task,
        "role": agent.role,
        "round": round_index,
        "patient": context,
        "evidence": evidence,
        "critique": critique,
        "drafts": drafts,
    }
    return (
        f"You are the {agent.role} in a knee-osteoarthritis multidisciplinary team. "
        f"Respond with a single JSON object for task '{task}'.\n"
        f"{_CONTEXT_OPEN}{json.dumps(payload, sort_keys=True)}{_CONTEXT_CLOSE}"
    )


def parse_context(prompt: str) -> dict:
    start = prompt.index(_CONTEXT_OPEN) + len(_CONTEXT_OPEN)
    end = prompt.index(_CONTEXT_CLOSE)
    return json.loads(prompt[start:end])


class MockTherapyLLM(LLMClient):
    """Deterministic MDT backend: structured drafts from the prompt context.

    ``revision_rounds`` controls how many critique/revision cycles the
    coordinator requests before approving.
    """

    def __init__(self, seed: int = 0, revision_rounds: int = 1):
        self.seed = seed
        self.revision_rounds = revision_rounds

    def complete(self, prompt: str) -> str:
        context = parse_context(prompt)
        task = context["task"]
        if task == "draft":
            return json.dumps(self._draft(context))
        if task == "critique":
            return json.dumps(self._critique(context))
        if task == "synthesize":
            return json.dumps(self._synthesize(context))
        raise LLMError(f"mock cannot handle task {task!r}")

    # -- drafts ------------------------------------------------------------
    def _draft(self, context: dict) -> dict:
        role = context["role"]
        severity = context["patient"]["severity"]
        cite = [e["id"] for e in context["evidence"][:2]]
        note = ""
        if context.get("critique"):
            note = " Revised per coordinator feedback: " + context["critique"].get("note", "")

        if role == "exercise-prescriptionist":
            intensity = {
                "NoneDoubt": "light",
                "Mild": "light-to-moderate",
                "Moderate": "moderate",
                "Severe": "low-impact only",
            }[severity]
            return {
                "sections": {
                    "exercise": {
                        "frequency": "3 sessions per week",
                        "intensity": intensity,
                        "time": "30-40 minutes per session",
                        "type": "quadriceps strengthening plus low-impact aerobic work",
                        "volume": "90-120 minutes weekly",
                        "progression": "increase load 5-10% every 2 weeks as tolerated" + note,
                    }
                },
                "citations": cite,
                "interventions": ["quadriceps-strengthening", "low-impact-aerobic-exercise"]
                + (["aquatic-therapy"] if severity == "Severe" else []),
            }
        if role == "surgery-medication":
            meds = {
                "NoneDoubt": ["patient-education"],
                "Mild": ["topical-nsaid"],
                "Moderate": ["oral-nsaid", "intraarticular-corticosteroid"],
                "Severe": ["oral-nsaid", "total-knee-arthroplasty-referral"],
            }[severity]
            return {
                "sections": {
                    "medication-surgery": {
                        "medication": f"Stepwise analgesia appropriate for {severity} disease." + note,
                        "surgery": (
                            "Surgical referral indicated"
                            if severity == "Severe"
                            else "No surgical indication at present"
                        ),
                    }
                },
                "citations": cite,
                "interventions": meds,
            }
        if role == "nutrition-psychology":
            return {
                "sections": {
                    "nutrition": {
                        "adequacy": "Meet protein 1.0-1.2 g/kg/day and micronutrient needs",
                        "balance": "Mediterranean-style pattern across food groups",
                        "calorie-control": "300-500 kcal daily deficit while overweight",
                        "moderation": "Limit added sugar, alcohol, and ultra-processed food",
                        "variety": "Rotate vegetables, legumes, fish and whole grains" + note,
                    },
                    "psychology": {
                        "support": "Brief cognitive-behavioral strategies for pain coping and activity pacing"
                    },
                },
                "citations": cite,
                "interventions": ["weight-management-program", "mediterranean-diet", "cbt-pain-coping"],
            }
        raise LLMError(f"mock has no draft template for role {role!r}")

    # -- coordination ------------------------------------------------------
    def _critique(self, context: dict) -> dict:
        round_index = context["round"]
        drafts = context["drafts"] or []
        wants_revision = round_index <= self.revision_rounds
        assessments = {}
        for draft in drafts:
            role = draft["role"]
            assessments[role] = {
                "approved": not wants_revision,
                "note": (
                    f"Round {round_index}: tighten the {role} recommendations to the patient's risk factors."
                    if wants_revision
                    else "Approved."
                ),
            }
        return {"assessments": assessments, "approved": not wants_revision}

    def _synthesize(self, context: dict) -> dict:
        severity = context["patient"]["severity"]
        risk = ", ".join(context["patient"]["risk_factors"]) or "no dominant risk factors"
        return {
            "integrated-summary": (
                f"Combined plan for {severity} knee osteoarthritis addressing {risk}; "
                "exercise, medication, nutrition and psychological support are coordinated below."
            )
        }


def draft_recommendation(
    agent: SpecialistAgent,
    eval_report: dict,
    risk_report: Optional[dict],
    round_index: int,
    critique: Optional[dict] = None,
    max_attempts: int = 3,
) -> DraftRecommendation:
    """Request one draft, enforce citations and the role validator.

    Transient backend failures retry once; validator failures re-prompt with
    the failure attached, and a bounded number of attempts later become an
    error.
    """
    known_ids = agent.kb_ids()
    last_failure: Optional[str] = None
    for attempt in range(max_attempts):
        feedback = critique
        if last_failure is not None:
            feedback = {"note": f"validator failure: {last_failure}"}
        prompt = assemble_prompt(
            agent, eval_report, risk_report, round_index, task="draft", critique=feedback
        )
        try:
            raw = agent.llm.complete(prompt)
        except TransientLLMError:
            raw = agent.llm.complete(prompt)  # one retry, then surface
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LLMError(f"{agent.role}: unparseable draft: {exc}") from exc

        draft = DraftRecommendation(
            role=agent.role,
            round=round_index,
            sections=payload.get("sections", {}),
            citations=list(payload.get("citations", [])),
            interventions=list(payload.get("interventions", [])),
        )
        unknown = [c for c in draft.citations if c not in known_ids]
        if unknown:
            raise ValueError(f"{agent.role}: citations not in the agent's knowledge bases: {unknown}")
        validator = ROLE_VALIDATORS.get(agent.role)
        missing = validator(draft) if validator else []
        if not missing:
            return draft
        last_failure = ", ".join(missing)
    raise ValueError(f"{agent.role}: draft failed validation after {max_attempts} attempts: {last_failure}")


def make_default_agents(
    kbs: dict, llm: Optional[LLMClient] = None, seed: int = 0
) -> dict[str, SpecialistAgent]:
    """Wire the four roles to their knowledge bases (guideline KB shared)."""
    llm = llm or MockTherapyLLM(seed=seed)
    guideline = kbs["guideline"]

    def pick(*domains: str) -> dict:
        selected = {d: kbs[d] for d in domains if d in kbs}
        selected["guideline"] = guideline
        return selected

    config = LLMClientConfig(backend="mock", seed=seed)
    return {
        "exercise-prescriptionist": SpecialistAgent(
            role="exercise-prescriptionist", kbs=pick("exercise", "rehabilitation"), llm=llm, llm_config=config
        ),
        "surgery-medication": SpecialistAgent(
            role="surgery-medication", kbs=pick("surgery-medication"), llm=llm, llm_config=config
        ),
        "nutrition-psychology": SpecialistAgent(
            role="nutrition-psychology", kbs=pick("nutrition", "psychology"), llm=llm, llm_config=config
        ),
        "clinical-decision": SpecialistAgent(
            role="clinical-decision", kbs=pick(), llm=llm, llm_config=config
        ),
    }
