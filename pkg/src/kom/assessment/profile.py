"""Patient profile assembly and validation."""

from __future__ import annotations

from kom.risk.features import feature_manifest


def build_profile(extracted: dict) -> dict:
    """Shape the dialogue's extracted fields into the profile document.

    Enforces the hard invariants: BMI positive, KOOS scores within 0-100.
    The attached feature-manifest version makes the 31-parameter set
    enumerable by consumers.
    """
    demographics = dict(extracted.get("demographics", {}))
    bmi = demographics.get("bmi")
    if bmi is not None and bmi <= 0:
        raise ValueError("BMI must be positive")

    koos = extracted.get("koos", {})
    for side, scores in koos.items():
        for subscale, value in scores.items():
            if not 0.0 <= value <= 100.0:
                raise ValueError(f"KOOS {subscale} ({side}) out of range: {value}")

    physical = extracted.get("physical-activity", {})
    history = extracted.get("past-and-family-history", {})
    treatment = extracted.get("current-treatment", {})

    manifest = feature_manifest()
    return {
        "demographics": {
            k: demographics.get(k) for k in ("age", "sex", "bmi", "body_weight_kg", "height_cm")
        },
        "koos": {side: dict(scores) for side, scores in koos.items()},
        "muscle_strength": {
            "peak_knee_extension_torque_left": physical.get("peak_knee_extension_torque_left"),
            "peak_knee_extension_torque_right": physical.get("peak_knee_extension_torque_right"),
        },
        "radiographic": dict(extracted.get("radiographic", {})),
        "lifestyle": {
            "physical_activity_score": physical.get("physical_activity_score"),
            "smoking_status": history.get("smoking_status"),
            "prior_knee_injury": history.get("prior_knee_injury"),
            "comorbidity_count": history.get("comorbidity_count"),
        },
        "contraindications": list(treatment.get("contraindications", [])),
        "narratives": {
            domain: section.get("narrative")
            for domain, section in extracted.items()
            if isinstance(section, dict) and section.get("narrative")
        },
        "feature_manifest_version": manifest["version"],
        "feature_count": manifest["count"],
    }
