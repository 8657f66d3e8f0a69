"""Evidence-grounded therapy planning via cooperating specialist agents."""

from kom.therapy.kb import EvidenceEntry, KnowledgeBase, ingest_evidence
from kom.therapy.embedding import embed, get_embedder
from kom.therapy.retrieval import retrieve
from kom.therapy.agents import (
    SPECIALIST_ROLES,
    SpecialistAgent,
    abcmv_validator,
    draft_recommendation,
    fitt_vp_validator,
    make_default_agents,
)
from kom.therapy.mdt import MDTError, run_mdt, validate_transcript
from kom.therapy.plan import check_contraindications, synthesize_plan

__all__ = [
    "EvidenceEntry",
    "KnowledgeBase",
    "ingest_evidence",
    "embed",
    "get_embedder",
    "retrieve",
    "SPECIALIST_ROLES",
    "SpecialistAgent",
    "abcmv_validator",
    "draft_recommendation",
    "fitt_vp_validator",
    "make_default_agents",
    "MDTError",
    "run_mdt",
    "validate_transcript",
    "check_contraindications",
    "synthesize_plan",
]
