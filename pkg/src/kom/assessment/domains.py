"""The eleven intake domains and their per-session status lattice."""

from __future__ import annotations

from enum import Enum


class IntakeDomain(str, Enum):
    DEMOGRAPHICS = "demographics"
    CHIEF_COMPLAINT = "chief-complaint-and-hpi"
    RADIOGRAPHIC_FINDINGS = "radiographic-findings"
    PAST_FAMILY_HISTORY = "past-and-family-history"
    CURRENT_TREATMENT = "current-treatment"
    PSYCHOLOGICAL_WELLBEING = "psychological-wellbeing"
    NUTRITIONAL_CONDITION = "nutritional-condition"
    PHYSICAL_ACTIVITY = "physical-activity"
    SOCIOECONOMIC_CONDITION = "socioeconomic-condition"
    TREATMENT_GOALS = "treatment-goals-and-preferences"
    REHABILITATION_RESOURCES = "rehabilitation-resources"


class DomainStatus(str, Enum):
    MISSING = "missing"
    PARTIAL = "partial"
    COMPLETE = "complete"
    DECLINED = "declined"


# missing -> partial -> complete/declined; a session never regresses.
_STATUS_RANK = {
    DomainStatus.MISSING: 0,
    DomainStatus.PARTIAL: 1,
    DomainStatus.COMPLETE: 2,
    DomainStatus.DECLINED: 2,
}


def advance_status(current: DomainStatus, proposed: DomainStatus) -> DomainStatus:
    """Monotone status update: downgrades are ignored."""
    if _STATUS_RANK[proposed] >= _STATUS_RANK[current]:
        return proposed
    return current


# Prompt order for the dialogue; radiographic findings are fed by the imaging
# stage (or declined), never prompted as free text.
PROMPTED_DOMAINS = [d for d in IntakeDomain if d != IntakeDomain.RADIOGRAPHIC_FINDINGS]

GLOSSARY: dict[str, str] = {
    "koos": (
        "KOOS (Knee injury and Osteoarthritis Outcome Score) is a questionnaire "
        "with five subscales, each scored 0-100 where 100 means no problems."
    ),
    "kl": (
        "The Kellgren-Lawrence (KL) grade rates knee osteoarthritis on X-rays "
        "from 0 (normal) to 4 (severe)."
    ),
    "kellgren": (
        "The Kellgren-Lawrence (KL) grade rates knee osteoarthritis on X-rays "
        "from 0 (normal) to 4 (severe)."
    ),
    "sclerosis": (
        "Subchondral sclerosis is a hardening (increased density) of the bone "
        "just under the joint cartilage, visible as brighter bone on an X-ray."
    ),
    "osteophyte": (
        "An osteophyte is a small bony outgrowth (bone spur) that forms at the "
        "edges of a joint affected by osteoarthritis."
    ),
    "jsn": (
        "Joint space narrowing (JSN) means the gap between thigh and shin bone "
        "seen on an X-ray has shrunk, usually from cartilage loss."
    ),
    "joint space narrowing": (
        "Joint space narrowing (JSN) means the gap between thigh and shin bone "
        "seen on an X-ray has shrunk, usually from cartilage loss."
    ),
}
