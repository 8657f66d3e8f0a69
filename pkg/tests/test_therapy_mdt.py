"""Specialist drafts, the MDT discussion loop, and plan synthesis."""

import json

import pytest

from kom.common import FixedClock
from kom.schemas import validate_document
from kom.therapy.agents import (
    MockTherapyLLM,
    SpecialistAgent,
    abcmv_validator,
    draft_recommendation,
    fitt_vp_validator,
    make_default_agents,
)
from kom.therapy.mdt import MDTError, run_mdt, validate_transcript
from kom.therapy.plan import UnresolvedConflictError, check_contraindications, synthesize_plan


def _eval_report(severity="Moderate", contraindications=("oral-nsaid",), preferences=""):
    return {
        "report_id": "eval-mdt",
        "patient_profile": {
            "demographics": {"age": 62, "sex": "F", "bmi": 29.0},
            "koos": {},
            "radiographic": {"kl_grade_left": 3.0, "kl_grade_right": 2.0},
            "contraindications": list(contraindications),
            "narratives": {"treatment-goals-and-preferences": preferences},
        },
        "imaging": {
            "knees": {
                "left": {"severity": severity},
                "right": {"severity": "Mild"},
            }
        },
    }


def test_exercise_draft_contains_all_fitt_vp_fields(small_kbs):
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    draft = draft_recommendation(agents["exercise-prescriptionist"], _eval_report(), None, 1)
    assert fitt_vp_validator(draft) == []
    assert draft.citations
    assert all(isinstance(c, str) for c in draft.citations)


def test_nutrition_draft_covers_abcmv(small_kbs):
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    draft = draft_recommendation(agents["nutrition-psychology"], _eval_report(), None, 1)
    assert abcmv_validator(draft) == []


def test_unknown_citation_rejected(small_kbs):
    class BadCitationLLM(MockTherapyLLM):
        def complete(self, prompt):
            payload = json.loads(super().complete(prompt))
            payload["citations"] = ["not-a-real-id"]
            return json.dumps(payload)

    agents = make_default_agents(small_kbs, llm=BadCitationLLM(seed=0))
    with pytest.raises(ValueError, match="not-a-real-id"):
        draft_recommendation(agents["exercise-prescriptionist"], _eval_report(), None, 1)


def test_validator_failure_retries_then_errors(small_kbs):
    class IncompleteLLM(MockTherapyLLM):
        def complete(self, prompt):
            payload = json.loads(super().complete(prompt))
            if "sections" in payload and "exercise" in payload.get("sections", {}):
                payload["sections"]["exercise"].pop("volume", None)
            return json.dumps(payload)

    agents = make_default_agents(small_kbs, llm=IncompleteLLM(seed=0))
    with pytest.raises(ValueError, match="volume"):
        draft_recommendation(agents["exercise-prescriptionist"], _eval_report(), None, 1)


def test_agent_requires_guideline_kb(small_kbs):
    with pytest.raises(ValueError, match="guideline"):
        SpecialistAgent(
            role="exercise-prescriptionist",
            kbs={"exercise": small_kbs["exercise"]},
            llm=MockTherapyLLM(),
        )


def test_mdt_transcript_structure(small_kbs):
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0, revision_rounds=1))
    transcript = run_mdt(_eval_report(), None, agents, max_rounds=2)
    kinds = [e["type"] for e in transcript.events]
    assert kinds.count("synthesis") == 1 and kinds[-1] == "synthesis"
    validate_transcript(transcript)
    validate_document(transcript.to_dict(), "transcript")


def test_mdt_critique_names_roles_and_revisions_advance_round(small_kbs):
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0, revision_rounds=1))
    transcript = run_mdt(_eval_report(), None, agents, max_rounds=3)
    critiques = [e for e in transcript.events if e["type"] == "critique"]
    assert critiques, "expected at least one revision cycle"
    critique = critiques[0]
    named = set(critique["content"]["assessments"])
    revisions = [e for e in transcript.events if e["type"] == "revision"]
    assert {r["role"] for r in revisions} == named
    for revision in revisions:
        assert revision["round"] == critique["round"] + 1


def test_mdt_missing_role_errors(small_kbs):
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    agents.pop("clinical-decision")
    with pytest.raises(ValueError, match="clinical-decision"):
        run_mdt(_eval_report(), None, agents)


def test_mdt_round_limit_carries_transcript(small_kbs):
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0, revision_rounds=99))
    with pytest.raises(MDTError) as excinfo:
        run_mdt(_eval_report(), None, agents, max_rounds=2)
    assert excinfo.value.transcript is not None
    assert any(e["type"] == "draft" for e in excinfo.value.transcript.events)


def test_synthesize_excludes_contraindicated_and_logs(small_kbs):
    report = _eval_report(contraindications=("Oral NSAID",))  # case-variant form
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    transcript = run_mdt(report, None, agents)
    plan = synthesize_plan(transcript, report["patient_profile"], clock=FixedClock())
    meds = plan["sections"]["medication-surgery"]["interventions"]
    assert "oral-nsaid" not in meds
    rules = [c["rule"] for c in plan["conflict_log"]]
    assert "safety/contraindication" in rules
    assert check_contraindications(plan, report["patient_profile"]) == []
    validate_document(plan, "plan")


def test_synthesize_no_conflicts_empty_log(small_kbs):
    report = _eval_report(contraindications=())
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    transcript = run_mdt(report, None, agents)
    plan = synthesize_plan(transcript, report["patient_profile"], clock=FixedClock())
    assert plan["conflict_log"] == []
    assert plan["sections"]["medication-surgery"]["interventions"] == [
        "oral-nsaid",
        "intraarticular-corticosteroid",
    ]


def test_synthesize_missing_section_fails(small_kbs):
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    transcript = run_mdt(_eval_report(), None, agents)
    transcript.events = [
        e for e in transcript.events if e["role"] != "nutrition-psychology"
    ]
    with pytest.raises(ValueError, match="nutrition-psychology"):
        synthesize_plan(transcript, _eval_report()["patient_profile"], clock=FixedClock())


def test_unresolved_safety_conflict_raises(small_kbs):
    report = _eval_report(
        contraindications=("oral-nsaid", "intraarticular-corticosteroid", "specialist-review-required"),
    )
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    transcript = run_mdt(report, None, agents)
    with pytest.raises(UnresolvedConflictError):
        synthesize_plan(transcript, report["patient_profile"], clock=FixedClock())


def test_patient_preference_removes_referral_when_not_severe(small_kbs):
    report = _eval_report(severity="Moderate", contraindications=(), preferences="I want to avoid surgery")
    # force a referral into the drafts by marking the knee severe in imaging only
    report["imaging"]["knees"]["left"]["severity"] = "Severe"
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    transcript = run_mdt(report, None, agents)
    plan = synthesize_plan(transcript, report["patient_profile"], clock=FixedClock())
    assert "total-knee-arthroplasty-referral" not in plan["sections"]["medication-surgery"]["interventions"]
    assert any(c["rule"] == "patient-preference" for c in plan["conflict_log"])


def test_guideline_keeps_referral_for_severe_disease(small_kbs):
    report = _eval_report(severity="Severe", contraindications=(), preferences="I want to avoid surgery")
    report["patient_profile"]["radiographic"] = {"kl_grade_left": 4.0, "kl_grade_right": 2.0}
    agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=0))
    transcript = run_mdt(report, None, agents)
    plan = synthesize_plan(transcript, report["patient_profile"], clock=FixedClock())
    assert "total-knee-arthroplasty-referral" in plan["sections"]["medication-surgery"]["interventions"]
    assert any(c["rule"] == "guideline-consistency" for c in plan["conflict_log"])


def test_mdt_bit_reproducible(small_kbs):
    report = _eval_report()

    def run():
        agents = make_default_agents(small_kbs, llm=MockTherapyLLM(seed=5))
        transcript = run_mdt(report, None, agents)
        plan = synthesize_plan(transcript, report["patient_profile"], clock=FixedClock())
        return json.dumps({"t": transcript.to_dict(), "p": plan}, sort_keys=True)

    assert run() == run()


def test_check_contraindications_canonicalization():
    plan = {"sections": {"medication-surgery": {"interventions": ["Oral NSAID"]}}}
    profile = {"contraindications": ["oral_nsaid"]}
    violations = check_contraindications(plan, profile)
    assert len(violations) == 1
    assert violations[0]["contraindication"] == "oral-nsaid"


def test_check_contraindications_empty_plan():
    assert check_contraindications({"sections": {}}, {"contraindications": ["x"]}) == []


def test_transient_backend_failure_retries_once(small_kbs):
    from kom.llm import TransientLLMError

    class FlakyLLM(MockTherapyLLM):
        def __init__(self):
            super().__init__(seed=0)
            self.calls = 0

        def complete(self, prompt):
            self.calls += 1
            if self.calls == 1:
                raise TransientLLMError("backend hiccup")
            return super().complete(prompt)

    flaky = FlakyLLM()
    agents = make_default_agents(small_kbs, llm=flaky)
    draft = draft_recommendation(agents["exercise-prescriptionist"], _eval_report(), None, 1)
    assert fitt_vp_validator(draft) == []
    assert flaky.calls == 2

    class DeadLLM(MockTherapyLLM):
        def complete(self, prompt):
            raise TransientLLMError("backend down")

    agents = make_default_agents(small_kbs, llm=DeadLLM(seed=0))
    with pytest.raises(TransientLLMError):
        draft_recommendation(agents["exercise-prescriptionist"], _eval_report(), None, 1)
