"""End-to-end pipeline runner: intake, imaging, risk, therapy on one case."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from kom.common import Clock, FixedClock, derive_seed
from kom.llm import LLMClientConfig
from kom.schemas import validate_document


@dataclass
class PipelineRunner:
    """Wires trained imaging models, fitted risk cards, and therapy agents.

    Everything is injected so a desk-scale run is deterministic under a fixed
    seed and fixed clock.
    """

    localizer: object = None
    imaging_models: dict = field(default_factory=dict)  # task -> ClassifierModel
    risk_cards: dict = field(default_factory=dict)  # task_id -> fitted ModelCard
    risk_backgrounds: dict = field(default_factory=dict)  # task_id -> design-matrix sample
    kbs: dict = field(default_factory=dict)
    seed: int = 0
    clock: Clock = field(default_factory=FixedClock)

    def run_case(self, script, study=None, case_id: str = "case-0001") -> dict:
        """Run the sequential pathway for one scripted patient."""
        from kom.assessment.scripted import run_scripted_session

        findings = None
        if study is not None:
            findings = self.analyze_study(study)

        state, eval_report = run_scripted_session(
            script,
            llm_config=LLMClientConfig(backend="mock", seed=self.seed),
            imaging_findings=findings.to_dict() if findings is not None else None,
            clock=self.clock,
            session_id=f"{case_id}-seed{self.seed}",
        )
        validate_document(eval_report, "report")

        risk_report = self.predict_risk(eval_report, report_id=f"risk-{case_id}")
        if risk_report is not None:
            validate_document(risk_report, "risk-report")

        plan, transcript = self.plan_therapy(eval_report, risk_report, plan_id=f"plan-{case_id}")
        validate_document(plan, "plan")

        return {
            "case_id": case_id,
            "eval_report": eval_report,
            "risk_report": risk_report,
            "plan": plan,
            "transcript": transcript.to_dict(),
        }

    # -- imaging ---------------------------------------------------------------
    def analyze_study(self, study):
        from kom.imaging.classifier import classify_knee
        from kom.imaging.localizer import localize_knee_centers
        from kom.imaging.preprocess import extract_rois
        from kom.imaging.types import ImagingFindings, PreprocessConfig

        if self.localizer is None or not self.imaging_models:
            raise ValueError("pipeline has no imaging models configured")
        loc = localize_knee_centers(study, self.localizer)
        size = next(iter(self.imaging_models.values())).input_size
        cfg = PreprocessConfig(
            window_center=0.5, window_width=1.0, resize_to=size, crop_to=size,
            augmentations=frozenset(),
        )
        rois = extract_rois(study, loc, cfg)
        knees = {}
        for roi in rois:
            kf = classify_knee(roi, self.imaging_models)
            knees[roi.side.value] = kf
        return ImagingFindings(study_id=study.study_id, knees=knees)

    # -- risk --------------------------------------------------------------------
    def predict_risk(self, eval_report: dict, report_id: str) -> Optional[dict]:
        from kom.risk.features import classification_targets, regression_targets
        from kom.risk.preprocess import transform
        from kom.risk.report import generate_risk_report, profile_to_feature_row
        from kom.risk.shapley import shap_attribution

        all_tasks = regression_targets() + classification_targets()
        if not self.risk_cards:
            return generate_risk_report(
                {}, {}, {}, all_tasks=all_tasks, report_id=report_id,
                generated_at=self.clock.now_iso(),
            )

        row = profile_to_feature_row(eval_report["patient_profile"])
        predictions: dict[str, float] = {}
        attributions = {}
        cohort: dict[str, float] = {}
        values: dict[str, dict] = {}
        cards = {}
        for task_id, card in sorted(self.risk_cards.items()):
            design = transform(row, card.preprocess_spec)
            if design.empty:
                continue  # profile incomplete for this task's features
            x = design.to_numpy(dtype=np.float64)[0]
            background = self.risk_backgrounds.get(task_id)
            if background is None:
                continue
            prediction = float(card.estimator.predict(x[None])[0])
            att = shap_attribution(
                card.estimator,
                x,
                background,
                feature_names=card.feature_names,
                seed=derive_seed(self.seed, task_id),
            )
            predictions[task_id] = prediction
            attributions[task_id] = att
            cohort[task_id] = card.cohort_mean
            values[task_id] = dict(zip(card.feature_names, x.tolist()))
            cards[task_id] = card
        return generate_risk_report(
            predictions,
            attributions,
            cohort,
            model_cards=cards,
            feature_values=values,
            all_tasks=all_tasks,
            report_id=report_id,
            generated_at=self.clock.now_iso(),
        )

    # -- therapy --------------------------------------------------------------
    def plan_therapy(self, eval_report: dict, risk_report: Optional[dict], plan_id: str):
        from kom.therapy.agents import MockTherapyLLM, make_default_agents
        from kom.therapy.mdt import run_mdt
        from kom.therapy.plan import synthesize_plan

        if not self.kbs:
            raise ValueError("pipeline has no knowledge bases configured")
        agents = make_default_agents(self.kbs, llm=MockTherapyLLM(seed=self.seed))
        transcript = run_mdt(eval_report, risk_report, agents, max_rounds=3)
        plan = synthesize_plan(
            transcript, eval_report.get("patient_profile", {}), clock=self.clock, plan_id=plan_id
        )
        return plan, transcript
