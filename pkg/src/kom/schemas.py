"""Versioned JSON schemas for the documents exchanged between stages."""

from __future__ import annotations

import jsonschema

from kom.assessment.domains import IntakeDomain
from kom.evaluation.scores import RUBRIC_DIMENSIONS

_DOMAIN_VALUES = [d.value for d in IntakeDomain]

EVALUATION_REPORT_SCHEMA = {
    "$id": "kom/evaluation-report/v1",
    "type": "object",
    "required": [
        "schema_version",
        "report_id",
        "generated_at",
        "patient_profile",
        "sections",
        "imaging",
        "quality_rubric",
    ],
    "properties": {
        "schema_version": {"const": 1},
        "report_id": {"type": "string", "minLength": 1},
        "session_id": {"type": "string"},
        "generated_at": {"type": "string"},
        "patient_profile": {
            "type": "object",
            "required": ["demographics", "koos", "contraindications", "feature_manifest_version"],
            "properties": {
                "demographics": {"type": "object"},
                "koos": {"type": "object"},
                "contraindications": {"type": "array", "items": {"type": "string"}},
                "feature_manifest_version": {"type": "integer"},
            },
        },
        "sections": {
            "type": "object",
            "required": _DOMAIN_VALUES,
            "additionalProperties": False,
            "properties": {
                name: {
                    "type": "object",
                    "required": ["status"],
                    "properties": {
                        "status": {"enum": ["missing", "partial", "complete", "declined"]}
                    },
                }
                for name in _DOMAIN_VALUES
            },
        },
        "imaging": {"type": "object"},
        "quality_rubric": {
            "type": "object",
            "required": [
                "field_completeness",
                "logical_consistency",
                "medical_accuracy",
                "readability",
            ],
            "additionalProperties": False,
            "properties": {
                slot: {"type": ["integer", "null"], "minimum": 1, "maximum": 5}
                for slot in (
                    "field_completeness",
                    "logical_consistency",
                    "medical_accuracy",
                    "readability",
                )
            },
        },
    },
}

RISK_REPORT_SCHEMA = {
    "$id": "kom/risk-report/v1",
    "type": "object",
    "required": ["schema_version", "report_id", "generated_at", "tasks", "force_plots"],
    "properties": {
        "schema_version": {"const": 1},
        "report_id": {"type": "string", "minLength": 1},
        "generated_at": {"type": "string"},
        "tasks": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["unavailable"],
                "properties": {
                    "unavailable": {"type": "boolean"},
                    "prediction": {"type": "number"},
                    "cohort_mean": {"type": ["number", "null"]},
                    "below_cohort_mean": {"type": "boolean"},
                    "top_positive": {"type": "array"},
                    "top_negative": {"type": "array"},
                },
            },
        },
        "force_plots": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["feature", "contribution"],
                    "properties": {
                        "feature": {"type": "string"},
                        "value": {"type": ["number", "null"]},
                        "contribution": {"type": "number"},
                    },
                },
            },
        },
    },
}

MANAGEMENT_PLAN_SCHEMA = {
    "$id": "kom/management-plan/v1",
    "type": "object",
    "required": [
        "schema_version",
        "plan_id",
        "generated_at",
        "sections",
        "citations",
        "conflict_log",
        "contraindication_checks",
    ],
    "properties": {
        "schema_version": {"const": 1},
        "plan_id": {"type": "string", "minLength": 1},
        "generated_at": {"type": "string"},
        "sections": {
            "type": "object",
            "required": [
                "exercise",
                "medication-surgery",
                "nutrition",
                "psychology",
                "integrated-summary",
            ],
            "additionalProperties": False,
            "properties": {
                name: {
                    "type": "object",
                    "required": ["content", "interventions", "citations"],
                }
                for name in (
                    "exercise",
                    "medication-surgery",
                    "nutrition",
                    "psychology",
                    "integrated-summary",
                )
            },
        },
        "citations": {"type": "array", "items": {"type": "string"}},
        "conflict_log": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["conflict", "resolution", "rule"],
            },
        },
        "contraindication_checks": {"type": "array"},
    },
}

TRANSCRIPT_SCHEMA = {
    "$id": "kom/discussion-transcript/v1",
    "type": "object",
    "required": ["participants", "events"],
    "properties": {
        "participants": {"type": "array", "items": {"type": "string"}},
        "events": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["type", "role", "round", "content"],
                "properties": {
                    "type": {"enum": ["draft", "critique", "revision", "synthesis"]},
                    "round": {"type": "integer", "minimum": 1},
                },
            },
        },
    },
}

RUBRIC_ROW_SCHEMA = {
    "$id": "kom/rubric-row/v1",
    "type": "object",
    "required": ["plan_id", "rater_id", "scores"],
    "properties": {
        "plan_id": {"type": "string"},
        "rater_id": {"type": "string"},
        "scores": {
            "type": "object",
            "required": list(RUBRIC_DIMENSIONS),
            "additionalProperties": False,
            "properties": {
                dim: {"type": "integer", "minimum": 1, "maximum": 5} for dim in RUBRIC_DIMENSIONS
            },
        },
    },
}

SCHEMAS = {
    "report": EVALUATION_REPORT_SCHEMA,
    "risk-report": RISK_REPORT_SCHEMA,
    "plan": MANAGEMENT_PLAN_SCHEMA,
    "transcript": TRANSCRIPT_SCHEMA,
    "rubric-row": RUBRIC_ROW_SCHEMA,
}


class SchemaError(ValueError):
    pass


def validate_document(document: dict, kind: str) -> None:
    """Validate a document against its versioned schema; raises SchemaError."""
    if kind not in SCHEMAS:
        raise SchemaError(f"unknown document kind {kind!r}")
    try:
        jsonschema.validate(document, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"{kind} document invalid: {exc.message}") from exc
