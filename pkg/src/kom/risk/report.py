"""Risk report assembly: predictions, cohort references, ranked contributors."""

from __future__ import annotations

from typing import Optional

import pandas as pd

from kom.risk.features import default_feature_columns
from kom.risk.shapley import ShapAttribution
from kom.risk.suite import ModelCard


def profile_to_feature_row(profile: dict) -> pd.DataFrame:
    """Map a patient profile document onto the 31-column feature row.

    The profile is the ``patient_profile`` section of an evaluation report;
    any feature it does not carry comes back as NaN (and will be rejected by
    the incomplete-case rule downstream).
    """
    demo = profile.get("demographics", {})
    koos = profile.get("koos", {})
    strength = profile.get("muscle_strength", {})
    radiographic = profile.get("radiographic", {})
    lifestyle = profile.get("lifestyle", {})

    row: dict[str, object] = {
        "age": demo.get("age"),
        "sex": demo.get("sex"),
        "body_weight_kg": demo.get("body_weight_kg"),
        "height_cm": demo.get("height_cm"),
        "bmi": demo.get("bmi"),
        "peak_knee_extension_torque_left": strength.get("peak_knee_extension_torque_left"),
        "peak_knee_extension_torque_right": strength.get("peak_knee_extension_torque_right"),
        "kl_grade_left": radiographic.get("kl_grade_left"),
        "kl_grade_right": radiographic.get("kl_grade_right"),
        "jsn_medial_left": radiographic.get("jsn_medial_left"),
        "jsn_medial_right": radiographic.get("jsn_medial_right"),
        "jsn_lateral_left": radiographic.get("jsn_lateral_left"),
        "jsn_lateral_right": radiographic.get("jsn_lateral_right"),
        "osteophyte_score_left": radiographic.get("osteophyte_score_left"),
        "osteophyte_score_right": radiographic.get("osteophyte_score_right"),
        "sclerosis_score_left": radiographic.get("sclerosis_score_left"),
        "sclerosis_score_right": radiographic.get("sclerosis_score_right"),
        "physical_activity_score": lifestyle.get("physical_activity_score"),
        "smoking_status": lifestyle.get("smoking_status"),
        "prior_knee_injury": lifestyle.get("prior_knee_injury"),
        "comorbidity_count": lifestyle.get("comorbidity_count"),
    }
    for subscale in ("pain", "symptoms", "adl", "sport", "qol"):
        for knee in ("left", "right"):
            row[f"koos_{subscale}_{knee}"] = koos.get(knee, {}).get(subscale)
    ordered = {c: row.get(c) for c in default_feature_columns()}
    return pd.DataFrame([ordered])


def top_contributors(attribution: ShapAttribution, k: int = 3) -> tuple[list[dict], list[dict]]:
    """Top-k positive and top-k negative contributors, largest magnitude first."""
    items = sorted(attribution.contributions.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
    positive = [
        {"feature": name, "contribution": value}
        for name, value in items
        if value > 0
    ][:k]
    negative = [
        {"feature": name, "contribution": value}
        for name, value in items
        if value < 0
    ][:k]
    return positive, negative


def generate_risk_report(
    predictions: dict[str, float],
    attributions: dict[str, ShapAttribution],
    cohort_stats: dict[str, float],
    model_cards: Optional[dict[str, ModelCard]] = None,
    feature_values: Optional[dict[str, dict[str, float]]] = None,
    all_tasks: Optional[list[str]] = None,
    k: int = 3,
    report_id: str = "risk-0001",
    generated_at: str = "",
) -> dict:
    """Assemble the per-task risk report document.

    Tasks listed in ``all_tasks`` without a prediction are marked unavailable
    rather than dropped.
    """
    tasks: dict[str, dict] = {}
    force_plots: dict[str, list[dict]] = {}
    for task_id in all_tasks or sorted(predictions):
        if task_id not in predictions:
            tasks[task_id] = {"unavailable": True}
            continue
        prediction = float(predictions[task_id])
        cohort_mean = cohort_stats.get(task_id)
        section: dict = {
            "unavailable": False,
            "prediction": prediction,
            "cohort_mean": cohort_mean,
            "below_cohort_mean": (cohort_mean is not None and prediction < cohort_mean),
        }
        attribution = attributions.get(task_id)
        if attribution is not None:
            positive, negative = top_contributors(attribution, k)
            values = (feature_values or {}).get(task_id, {})
            for bucket in (positive, negative):
                for entry in bucket:
                    entry["value"] = values.get(entry["feature"])
            section["top_positive"] = positive
            section["top_negative"] = negative
            section["base_value"] = attribution.base_value
            section["attribution_method"] = attribution.method
            force_plots[task_id] = [
                {
                    "feature": name,
                    "value": values.get(name),
                    "contribution": contribution,
                }
                for name, contribution in sorted(
                    attribution.contributions.items(), key=lambda kv: (-abs(kv[1]), kv[0])
                )
            ]
        if model_cards and task_id in model_cards:
            section["model_card"] = model_cards[task_id].to_dict()
        section["narrative"] = _narrative(task_id, section)
        tasks[task_id] = section

    return {
        "schema_version": 1,
        "report_id": report_id,
        "generated_at": generated_at,
        "tasks": tasks,
        "force_plots": force_plots,
    }


def _narrative(task_id: str, section: dict) -> str:
    if section.get("unavailable"):
        return f"No trained model is available for {task_id}."
    parts = [f"Predicted {task_id}: {section['prediction']:.2f}"]
    if section.get("cohort_mean") is not None:
        relation = "below" if section["below_cohort_mean"] else "at or above"
        parts.append(f"{relation} the cohort mean of {section['cohort_mean']:.2f}")
    negatives = section.get("top_negative") or []
    positives = section.get("top_positive") or []
    if negatives:
        worst = ", ".join(f"{e['feature']} ({e['contribution']:+.2f})" for e in negatives)
        parts.append(f"main negative contributors: {worst}")
    if positives:
        best = ", ".join(f"{e['feature']} ({e['contribution']:+.2f})" for e in positives)
        parts.append(f"main positive contributors: {best}")
    return "; ".join(parts) + "."
