"""Final plan synthesis: section merge, conflict ladder, contraindication guard."""

from __future__ import annotations

from typing import Optional

from kom.common import Clock
from kom.assessment.extract import canonical_code
from kom.therapy.agents import ABCMV_PRINCIPLES, FITT_VP_FIELDS
from kom.therapy.mdt import DiscussionTranscript

PLAN_SECTIONS = ("exercise", "medication-surgery", "nutrition", "psychology", "integrated-summary")

# Conflict-resolution priority ladder, highest first.
RESOLUTION_RULES = (
    "safety/contraindication",
    "guideline-consistency",
    "risk-factor-targeting",
    "patient-preference",
)

# Intervention pairs that contradict each other; the first-listed code wins
# under the guideline-consistency rule.
INCOMPATIBLE_INTERVENTIONS = (
    ("total-knee-arthroplasty-referral", "high-impact-running-program"),
)

_SECTION_BY_ROLE = {
    "exercise-prescriptionist": ("exercise",),
    "surgery-medication": ("medication-surgery",),
    "nutrition-psychology": ("nutrition", "psychology"),
}

_FALLBACK_INTERVENTION = "specialist-review-required"


class UnresolvedConflictError(RuntimeError):
    def __init__(self, message: str, conflict_log: list):
        super().__init__(message)
        self.conflict_log = conflict_log


def check_contraindications(plan: dict, profile: dict) -> list[dict]:
    """Exact canonical-code matches between plan interventions and the profile."""
    contraindicated = {canonical_code(c) for c in profile.get("contraindications", [])}
    violations = []
    for section, payload in plan.get("sections", {}).items():
        if not isinstance(payload, dict):
            continue
        for intervention in payload.get("interventions", []):
            code = canonical_code(intervention)
            if code in contraindicated:
                violations.append(
                    {"section": section, "intervention": intervention, "contraindication": code}
                )
    return violations


def _final_drafts(transcript: DiscussionTranscript) -> dict[str, dict]:
    finals: dict[str, dict] = {}
    for event in transcript.events:
        if event["type"] in ("draft", "revision"):
            finals[event["role"]] = event["content"]
    return finals


def synthesize_plan(
    transcript: DiscussionTranscript,
    profile: dict,
    clock: Optional[Clock] = None,
    plan_id: str = "plan-0001",
) -> dict:
    """Merge the final drafts into the five-section management plan.

    Conflicts resolve down the fixed ladder (safety, guideline consistency,
    risk-factor targeting, patient preference), every resolution logged. The
    returned plan never carries an intervention listed in the profile's
    contraindications.
    """
    synthesis = [e for e in transcript.events if e["type"] == "synthesis"]
    if not synthesis:
        raise ValueError("transcript has no synthesis event")
    finals = _final_drafts(transcript)

    conflict_log: list[dict] = []
    sections: dict[str, dict] = {}
    contraindicated = {canonical_code(c) for c in profile.get("contraindications", [])}
    preferences = str(profile.get("narratives", {}).get("treatment-goals-and-preferences", "")).lower()

    for role, names in _SECTION_BY_ROLE.items():
        if role not in finals:
            raise ValueError(f"no final draft for role {role!r}")
        draft = finals[role]
        role_interventions = [canonical_code(i) for i in draft.get("interventions", [])]

        kept: list[str] = []
        for code in role_interventions:
            if code in contraindicated:
                conflict_log.append(
                    {
                        "conflict": f"{role} proposed {code}, which is contraindicated for this patient",
                        "resolution": f"excluded {code}",
                        "rule": "safety/contraindication",
                    }
                )
                continue
            kept.append(code)

        for winner, loser in INCOMPATIBLE_INTERVENTIONS:
            if winner in kept and loser in kept:
                kept.remove(loser)
                conflict_log.append(
                    {
                        "conflict": f"{winner} and {loser} are incompatible",
                        "resolution": f"kept {winner}, removed {loser}",
                        "rule": "guideline-consistency",
                    }
                )

        if "avoid surgery" in preferences and "total-knee-arthroplasty-referral" in kept:
            severity = _severity_from_profile(profile)
            if severity == "Severe":
                conflict_log.append(
                    {
                        "conflict": "patient prefers to avoid surgery but guidelines indicate referral",
                        "resolution": "kept total-knee-arthroplasty-referral",
                        "rule": "guideline-consistency",
                    }
                )
            else:
                kept.remove("total-knee-arthroplasty-referral")
                conflict_log.append(
                    {
                        "conflict": "surgical referral proposed despite non-severe disease and patient preference",
                        "resolution": "removed total-knee-arthroplasty-referral",
                        "rule": "patient-preference",
                    }
                )

        if role_interventions and not kept:
            if _FALLBACK_INTERVENTION in contraindicated:
                raise UnresolvedConflictError(
                    f"{role}: every intervention is contraindicated and no safe fallback exists",
                    conflict_log,
                )
            kept = [_FALLBACK_INTERVENTION]
            conflict_log.append(
                {
                    "conflict": f"all {role} interventions were excluded",
                    "resolution": f"substituted {_FALLBACK_INTERVENTION}",
                    "rule": "safety/contraindication",
                }
            )

        for name in names:
            body = dict(draft.get("sections", {}).get(name, {}))
            sections[name] = {
                "content": body,
                "interventions": kept if name == names[0] else [],
                "citations": list(draft.get("citations", [])),
            }

    sections["integrated-summary"] = {
        "content": synthesis[-1]["content"],
        "interventions": [],
        "citations": [],
    }

    missing_sections = [s for s in PLAN_SECTIONS if s not in sections]
    if missing_sections:
        raise ValueError(f"plan is missing sections: {missing_sections}")
    missing_fitt = [
        f for f in FITT_VP_FIELDS if not str(sections["exercise"]["content"].get(f) or "").strip()
    ]
    if missing_fitt:
        raise ValueError(f"exercise section fails FITT-VP validation: missing {missing_fitt}")
    missing_abcmv = [
        p for p in ABCMV_PRINCIPLES if not str(sections["nutrition"]["content"].get(p) or "").strip()
    ]
    if missing_abcmv:
        raise ValueError(f"nutrition section fails ABCMV validation: missing {missing_abcmv}")

    plan = {
        "schema_version": 1,
        "plan_id": plan_id,
        "generated_at": (clock or Clock()).now_iso(),
        "sections": sections,
        "citations": sorted({c for s in sections.values() for c in s["citations"]}),
        "conflict_log": conflict_log,
        "contraindication_checks": [],
    }
    violations = check_contraindications(plan, profile)
    if violations:  # defensive: construction above must prevent this
        raise UnresolvedConflictError(f"plan still violates contraindications: {violations}", conflict_log)
    plan["contraindication_checks"] = violations
    return plan


def _severity_from_profile(profile: dict) -> str:
    radiographic = profile.get("radiographic", {})
    kl = max(
        (radiographic.get(f"kl_grade_{side}") or 0) for side in ("left", "right")
    ) if radiographic else 0
    if kl >= 4:
        return "Severe"
    if kl >= 3:
        return "Moderate"
    if kl >= 2:
        return "Mild"
    return "NoneDoubt"
