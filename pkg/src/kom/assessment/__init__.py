"""Structured patient intake: dialogue, terminology help, report generation."""

from kom.assessment.domains import DomainStatus, IntakeDomain
from kom.assessment.koos import KOOS_ITEM_COUNTS, KoosFlow, score_subscale
from kom.assessment.dialogue import (
    DialogueState,
    assess_completeness,
    attach_imaging,
    guide_koos,
    ingest_answer,
    start_session,
)
from kom.assessment.report import generate_report
from kom.assessment.scripted import ScriptedPatient, default_intake_script, run_scripted_session

__all__ = [
    "DomainStatus",
    "IntakeDomain",
    "KOOS_ITEM_COUNTS",
    "KoosFlow",
    "score_subscale",
    "DialogueState",
    "assess_completeness",
    "attach_imaging",
    "guide_koos",
    "ingest_answer",
    "start_session",
    "generate_report",
    "ScriptedPatient",
    "default_intake_script",
    "run_scripted_session",
]
