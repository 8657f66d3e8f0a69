"""Pipeline backends the HTTP service delegates to.

``MockBackend`` wires the real dialogue and therapy modules to deterministic
stand-ins for the model-inference stages, keeping service tests fast while
exercising the same document schemas as the full pipeline.
"""

from __future__ import annotations

from typing import Optional

from kom.common import Clock, FixedClock, derive_seed
from kom.llm import LLMClientConfig
from kom.assessment.dialogue import DialogueState, attach_imaging, ingest_answer, start_session
from kom.assessment.report import generate_report
from kom.schemas import validate_document


class MockBackend:
    """Deterministic backend: mock-LLM intake/therapy, canned risk predictions."""

    def __init__(self, seed: int = 0, clock: Optional[Clock] = None):
        self.seed = seed
        self.clock = clock or FixedClock()
        self._kbs = None

    # -- intake ------------------------------------------------------------
    def start_intake(self, session_id: str) -> dict:
        state = start_session(
            LLMClientConfig(backend="mock", seed=self.seed),
            session_id=session_id,
            clock=self.clock,
        )
        return state.to_dict()

    def intake_answer(self, state_dict: dict, text: str) -> dict:
        state = DialogueState.from_dict(state_dict)
        ingest_answer(state, text, clock=self.clock)
        return state.to_dict()

    def attach_imaging(self, state_dict: dict, findings: dict) -> dict:
        state = DialogueState.from_dict(state_dict)
        attach_imaging(state, findings, clock=self.clock)
        return state.to_dict()

    def intake_report(self, state_dict: dict, force: bool = False) -> dict:
        state = DialogueState.from_dict(state_dict)
        report = generate_report(state, force=force, clock=self.clock)
        validate_document(report, "report")
        return report

    # -- risk ----------------------------------------------------------------
    def risk_report(self, report: dict) -> dict:
        """Deterministic stand-in predictions derived from the profile."""
        from kom.risk.report import generate_risk_report
        from kom.risk.shapley import ShapAttribution

        profile = report.get("patient_profile", {})
        koos = profile.get("koos", {})
        radiographic = profile.get("radiographic", {})
        bmi = (profile.get("demographics") or {}).get("bmi") or 27.0

        predictions: dict[str, float] = {}
        attributions: dict[str, ShapAttribution] = {}
        cohort: dict[str, float] = {}
        for knee in ("left", "right"):
            pain = (koos.get(knee) or {}).get("pain", 70.0)
            kl = radiographic.get(f"kl_grade_{knee}", 1.0)
            task = f"koos_pain_{knee}_v01"
            drop = 2.0 * kl + 0.4 * (bmi - 25.0)
            prediction = max(0.0, min(100.0, pain - drop))
            contributions = {
                f"kl_grade_{knee}": -2.0 * kl,
                "bmi": -0.4 * (bmi - 25.0),
                f"koos_pain_{knee}": prediction - 70.0 + 2.0 * kl + 0.4 * (bmi - 25.0),
            }
            base = 70.0
            predictions[task] = prediction
            attributions[task] = ShapAttribution(
                base_value=base,
                contributions=contributions,
                prediction=prediction,
                method="mock-backend",
                tolerance=1e-6,
            )
            cohort[task] = 75.5
        doc = generate_risk_report(
            predictions,
            attributions,
            cohort,
            report_id=f"risk-{report['report_id']}",
            generated_at=self.clock.now_iso(),
        )
        validate_document(doc, "risk-report")
        return doc

    # -- therapy -------------------------------------------------------------
    def plan(self, report: dict, risk: Optional[dict]) -> dict:
        from kom.therapy.agents import MockTherapyLLM, make_default_agents
        from kom.therapy.mdt import run_mdt
        from kom.therapy.plan import synthesize_plan
        from kom.therapy.synthetic import load_synthetic_kbs

        if self._kbs is None:
            self._kbs = load_synthetic_kbs(
                counts={d: 12 for d in ("psychology", "nutrition", "surgery-medication", "rehabilitation", "exercise", "guideline")},
                seed=derive_seed(self.seed, "kbs"),
            )
        agents = make_default_agents(self._kbs, llm=MockTherapyLLM(seed=self.seed))
        transcript = run_mdt(report, risk, agents, max_rounds=3)
        plan = synthesize_plan(
            transcript,
            report.get("patient_profile", {}),
            clock=self.clock,
            plan_id=f"plan-{report['report_id']}",
        )
        plan["transcript"] = transcript.to_dict()
        validate_document(plan, "plan")
        return plan
