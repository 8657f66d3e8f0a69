"""Evaluation report assembly from a finished (or forced) dialogue state."""

from __future__ import annotations

from typing import Optional

from kom.common import Clock
from kom.assessment.dialogue import DialogueState, assess_completeness
from kom.assessment.domains import DomainStatus, IntakeDomain
from kom.assessment.profile import build_profile

RUBRIC_SLOTS = ("field_completeness", "logical_consistency", "medical_accuracy", "readability")


def generate_report(
    state: DialogueState,
    force: bool = False,
    clock: Optional[Clock] = None,
    report_id: Optional[str] = None,
) -> dict:
    """Build the structured 11-section evaluation report.

    Refuses to run while domains are outstanding unless forced, in which case
    the gaps are marked in their sections. Rubric slots ship present but
    unscored; raters fill them outside this system.
    """
    gaps = assess_completeness(state)
    if gaps and not force:
        raise ValueError(
            "intake incomplete; missing domains: " + ", ".join(d.value for d in gaps)
        )

    sections = {}
    for domain in IntakeDomain:
        status = state.domain_status[domain.value]
        section: dict = {"status": status}
        data = state.extracted.get(domain.value)
        if isinstance(data, dict):
            section["narrative"] = data.get("narrative")
            fields = {k: v for k, v in data.items() if k != "narrative"}
            if fields:
                section["fields"] = fields
        if domain == IntakeDomain.RADIOGRAPHIC_FINDINGS:
            if status == DomainStatus.COMPLETE.value:
                section["fields"] = dict(state.extracted.get("radiographic", {}))
            else:
                section["narrative"] = "not-provided"
        sections[domain.value] = section

    imaging = state.extracted.get("imaging")
    report = {
        "schema_version": 1,
        "report_id": report_id or f"eval-{state.session_id}",
        "session_id": state.session_id,
        "generated_at": (clock or Clock()).now_iso(),
        "patient_profile": build_profile(state.extracted),
        "sections": sections,
        "imaging": imaging if imaging is not None else {"status": "not-provided"},
        "quality_rubric": {slot: None for slot in RUBRIC_SLOTS},
    }
    return report
