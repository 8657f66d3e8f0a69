"""HTTP surface: stage order, edits, approvals, audit chain."""

import pytest
from fastapi.testclient import TestClient

from kom.common import FixedClock, sequential_ids
from kom.service.api import create_app
from kom.service.backend import MockBackend
from kom.assessment.scripted import ScriptedPatient, default_intake_script


@pytest.fixture()
def client(tmp_path):
    app = create_app(
        backend=MockBackend(seed=0, clock=FixedClock()),
        data_dir=tmp_path,
        clock=FixedClock(),
        id_factory=sequential_ids("sess"),
    )
    with TestClient(app) as c:
        yield c


def _drive_intake(client, session, imaging_available=True):
    script = ScriptedPatient(default_intake_script(imaging_available=imaging_available))
    prompt = session["prompt"]
    for _ in range(500):
        if prompt is None:
            break
        if prompt["key"] in ("imaging.pending", "session.finished"):
            break
        answer = script.answer_for(prompt)
        response = client.post(f"/sessions/{session['session_id']}/answer", json={"text": answer})
        assert response.status_code == 200, response.text
        payload = response.json()
        if payload["finished"]:
            break
        prompt = payload["prompt"]
        if payload.get("pending", {}).get("kind") == "imaging-wait":
            break
    return session["session_id"]


def _findings():
    from kom.imaging.types import FEATURE_TASKS

    features = []
    for task, card in FEATURE_TASKS.items():
        probs = [0.0] * card
        probs[-1] = 1.0
        features.append({"feature": task, "grade": card - 1, "probabilities": probs})
    knee = {
        "side": "left",
        "severity": "Moderate",
        "severity_probabilities": [0.0, 0.1, 0.8, 0.1],
        "kl_estimate": 3,
        "features": features,
        "oa_present": True,
        "heatmaps": {},
        "unavailable_tasks": [],
    }
    return {"study_id": "s-api", "knees": {"left": knee, "right": dict(knee, side="right")}}


def test_create_session_starts_at_intake(client):
    response = client.post("/sessions", json={})
    assert response.status_code == 201
    body = response.json()
    assert body["stage"] == "intake"
    assert body["prompt"]["key"] == "radiographs.available"


def test_unknown_session_404(client):
    assert client.get("/sessions/nope/report").status_code == 404
    assert client.post("/sessions/nope/answer", json={"text": "x"}).status_code == 404


def test_plan_before_risk_blocked_sequential(client):
    session = client.post("/sessions", json={}).json()
    response = client.post(f"/sessions/{session['session_id']}/plan", json={})
    assert response.status_code == 409


def test_full_sequential_flow(client):
    session = client.post("/sessions", json={}).json()
    sid = _drive_intake(client, session, imaging_available=True)

    # intake finished enough -> approve to imaging
    assert client.post(f"/sessions/{sid}/approve", json={"stage": "intake"}).status_code == 200
    assert client.post(f"/sessions/{sid}/imaging", json={"findings": _findings()}).status_code == 200

    report = client.get(f"/sessions/{sid}/report")
    assert report.status_code == 200
    assert report.json()["version"] == 1
    assert len(report.json()["document"]["sections"]) == 11

    assert client.post(f"/sessions/{sid}/approve", json={"stage": "imaging"}).status_code == 200
    risk = client.post(f"/sessions/{sid}/risk", json={})
    assert risk.status_code == 200
    assert risk.json()["document"]["tasks"]

    assert client.post(f"/sessions/{sid}/approve", json={"stage": "risk"}).status_code == 200
    plan = client.post(f"/sessions/{sid}/plan", json={})
    assert plan.status_code == 200
    sections = plan.json()["document"]["sections"]
    assert set(sections) == {"exercise", "medication-surgery", "nutrition", "psychology", "integrated-summary"}

    assert client.post(f"/sessions/{sid}/approve", json={"stage": "therapy"}).status_code == 200
    audit = client.get(f"/sessions/{sid}/audit").json()
    assert audit["valid"] is True


def test_edit_records_audit_and_versions(client):
    session = client.post("/sessions", json={}).json()
    sid = _drive_intake(client, session, imaging_available=False)
    report = client.get(f"/sessions/{sid}/report").json()

    doc = report["document"]
    doc["sections"]["chief-complaint-and-hpi"]["narrative"] = "clinician-corrected narrative"
    put = client.put(
        f"/sessions/{sid}/report",
        json={"document": doc, "version": report["version"]},
        headers={"X-Actor": "dr-lee"},
    )
    assert put.status_code == 200
    assert put.json()["version"] == 2

    audit = client.get(f"/sessions/{sid}/audit").json()
    edits = [e for e in audit["events"] if e["action"] == "document-edited"]
    assert len(edits) == 1
    assert edits[0]["actor"] == "dr-lee"
    assert audit["edit_log"][0]["stage"] == "intake"
    assert audit["valid"] is True

    refetched = client.get(f"/sessions/{sid}/report").json()
    assert refetched["version"] == 2
    assert refetched["document"]["sections"]["chief-complaint-and-hpi"]["narrative"] == (
        "clinician-corrected narrative"
    )


def test_stale_version_rejected(client):
    session = client.post("/sessions", json={}).json()
    sid = _drive_intake(client, session, imaging_available=False)
    report = client.get(f"/sessions/{sid}/report").json()
    stale = client.put(
        f"/sessions/{sid}/report", json={"document": report["document"], "version": 99}
    )
    assert stale.status_code == 409


def test_schema_violation_rejected_on_put(client):
    session = client.post("/sessions", json={}).json()
    sid = _drive_intake(client, session, imaging_available=False)
    report = client.get(f"/sessions/{sid}/report").json()
    broken = dict(report["document"])
    broken.pop("sections")
    response = client.put(
        f"/sessions/{sid}/report", json={"document": broken, "version": report["version"]}
    )
    assert response.status_code == 400


def test_approve_is_idempotent_one_audit_event(client):
    session = client.post("/sessions", json={}).json()
    sid = _drive_intake(client, session, imaging_available=False)
    first = client.post(f"/sessions/{sid}/approve", json={"stage": "intake"})
    second = client.post(f"/sessions/{sid}/approve", json={"stage": "intake"})
    assert first.status_code == 200 and second.status_code == 200
    assert second.json()["already_approved"] is True
    audit = client.get(f"/sessions/{sid}/audit").json()
    approvals = [e for e in audit["events"] if e["action"] == "approved"]
    assert len(approvals) == 1


def test_approve_future_stage_blocked(client):
    session = client.post("/sessions", json={}).json()
    response = client.post(f"/sessions/{session['session_id']}/approve", json={"stage": "risk"})
    assert response.status_code == 409


def test_independent_mode_requires_manual_flag(client):
    session = client.post("/sessions", json={"mode": "independent"}).json()
    sid = session["session_id"]
    blocked = client.post(f"/sessions/{sid}/risk", json={})
    assert blocked.status_code == 409
    report = MockBackend(seed=0, clock=FixedClock()).intake_report(
        _finished_state(), force=False
    )
    allowed = client.post(
        f"/sessions/{sid}/risk", json={"manual_input": True, "report": report}
    )
    assert allowed.status_code == 200


def _finished_state():
    from kom.llm import LLMClientConfig
    from kom.assessment.scripted import run_scripted_session

    script = ScriptedPatient(default_intake_script(imaging_available=False))
    state, _ = run_scripted_session(script, llm_config=LLMClientConfig(backend="mock", seed=0))
    return state.to_dict()


def test_sessions_survive_restart(client, tmp_path):
    session = client.post("/sessions", json={}).json()
    sid = _drive_intake(client, session, imaging_available=False)
    client.get(f"/sessions/{sid}/report")

    # a new app over the same data dir replays the same session
    app2 = create_app(
        backend=MockBackend(seed=0, clock=FixedClock()),
        data_dir=tmp_path,
        clock=FixedClock(),
        id_factory=sequential_ids("other"),
    )
    with TestClient(app2) as fresh:
        report = fresh.get(f"/sessions/{sid}/report")
        assert report.status_code == 200
        assert len(report.json()["document"]["sections"]) == 11
