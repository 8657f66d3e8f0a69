"""Rule-based field extraction used by the deterministic intake backend."""

from __future__ import annotations

import re
from typing import Optional

from kom.assessment.domains import IntakeDomain

_DECLINE_RE = re.compile(r"\b(decline|skip|prefer not|rather not|no comment)\b", re.I)
_YES_RE = re.compile(r"\b(yes|yeah|yep|available|i do|i have)\b", re.I)
_NO_RE = re.compile(r"\b(no|nope|not available|don't have|do not have|none)\b", re.I)


def is_decline(text: str) -> bool:
    return bool(_DECLINE_RE.search(text))


def parse_yes_no(text: str) -> Optional[bool]:
    if _YES_RE.search(text):
        return True
    if _NO_RE.search(text):
        return False
    return None


def canonical_code(term: str) -> str:
    """Canonical intervention/contraindication code: lowercase, dash-joined."""
    return re.sub(r"[^a-z0-9]+", "-", term.lower()).strip("-")


def _first_float(pattern: str, text: str) -> Optional[float]:
    match = re.search(pattern, text, re.I)
    return float(match.group(1)) if match else None


def extract_demographics(text: str) -> dict:
    fields: dict = {}
    age = _first_float(r"\b(?:i am|i'm|age(?:d)?(?:\s*(?:is|:|=))?)\s*(\d{1,3})\b", text)
    if age is None:
        age = _first_float(r"\b(\d{1,3})\s*(?:years?\s*old|y/?o|yrs?\b)", text)
    if age is not None:
        fields["age"] = age
    if re.search(r"\b(male|man)\b", text, re.I):
        fields["sex"] = "M"
    elif re.search(r"\b(female|woman)\b", text, re.I):
        fields["sex"] = "F"
    bmi = _first_float(r"\bbmi\s*(?:is|:|=|of)?\s*([\d.]+)", text)
    if bmi is not None:
        fields["bmi"] = bmi
    weight = _first_float(r"\b([\d.]+)\s*kg\b", text)
    if weight is not None:
        fields["body_weight_kg"] = weight
    height = _first_float(r"\b([\d.]+)\s*cm\b", text)
    if height is not None:
        fields["height_cm"] = height
    return fields


def extract_physical_activity(text: str) -> dict:
    fields: dict = {}
    torque = re.search(
        r"torque[^\d]*([\d.]+)[^\d]+([\d.]+)", text, re.I
    )
    if torque:
        fields["peak_knee_extension_torque_left"] = float(torque.group(1))
        fields["peak_knee_extension_torque_right"] = float(torque.group(2))
    score = _first_float(r"activity score[^\d]*([\d.]+)", text)
    if score is not None:
        fields["physical_activity_score"] = score
    return fields


def extract_history(text: str) -> dict:
    fields: dict = {}
    if re.search(r"never smoked|non-?smoker", text, re.I):
        fields["smoking_status"] = "never"
    elif re.search(r"used to smoke|former smoker|quit smoking", text, re.I):
        fields["smoking_status"] = "former"
    elif re.search(r"\bsmoke", text, re.I):
        fields["smoking_status"] = "current"
    if re.search(r"no (?:prior )?(?:knee )?injur", text, re.I):
        fields["prior_knee_injury"] = "no"
    elif re.search(r"injur", text, re.I):
        fields["prior_knee_injury"] = "yes"
    comorbid = _first_float(r"(\d+)\s*comorbidit", text)
    if comorbid is not None:
        fields["comorbidity_count"] = comorbid
    return fields


def extract_contraindications(text: str) -> list[str]:
    codes = []
    for match in re.finditer(
        r"(?:allergic to|cannot take|can't take|intoleran\w* to|contraindicat\w*[:\s]+)\s*([a-zA-Z][\w\s\-]*?)(?=[.,;]|$|\band\b)",
        text,
        re.I,
    ):
        code = canonical_code(match.group(1))
        if code:
            codes.append(code)
    return codes


# Required structured fields before a domain counts as complete; narrative
# domains just need a non-empty answer.
REQUIRED_FIELDS = {
    IntakeDomain.DEMOGRAPHICS: ("age", "sex", "bmi"),
}


def extract_for_domain(domain: IntakeDomain, text: str) -> dict:
    if domain == IntakeDomain.DEMOGRAPHICS:
        return extract_demographics(text)
    if domain == IntakeDomain.PHYSICAL_ACTIVITY:
        return extract_physical_activity(text)
    if domain == IntakeDomain.PAST_FAMILY_HISTORY:
        return extract_history(text)
    if domain == IntakeDomain.CURRENT_TREATMENT:
        contra = extract_contraindications(text)
        return {"contraindications": contra} if contra else {}
    return {}
