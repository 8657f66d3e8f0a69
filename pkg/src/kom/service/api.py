"""HTTP surface for the pipeline: sessions, documents, approvals, audit."""

from __future__ import annotations

import threading
from typing import Optional

from kom.common import Clock, stable_hash, uuid_ids
from kom.schemas import SchemaError, validate_document
from kom.service.backend import MockBackend
from kom.service.sessions import (
    DOCUMENT_STAGE,
    STAGES,
    PipelineSession,
    StageError,
    apply_event,
    next_stage,
    replay,
)
from kom.service.storage import EventStore, StorageError, verify_chain


class UnknownSession(KeyError):
    pass


class SessionService:
    """Event-sourced session manager; one writer lock per session."""

    def __init__(
        self,
        store: EventStore,
        backend=None,
        clock: Optional[Clock] = None,
        id_factory=None,
    ):
        self.store = store
        self.backend = backend or MockBackend()
        self.clock = clock or Clock()
        self.id_factory = id_factory or uuid_ids()
        self._sessions: dict[str, PipelineSession] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    # -- infrastructure ------------------------------------------------------
    def _lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def _get(self, session_id: str) -> PipelineSession:
        if session_id in self._sessions:
            return self._sessions[session_id]
        if self.store.exists(session_id):
            session = replay(self.store.load(session_id))
            self._sessions[session_id] = session
            return session
        raise UnknownSession(session_id)

    def _record(self, session: PipelineSession, actor: str, action: str, payload: dict) -> None:
        event = self.store.append(session.session_id, actor, action, payload)
        apply_event(session, event)

    def _require_stage(self, session: PipelineSession, stage: str, manual_input: bool) -> None:
        if session.mode == "independent":
            if session.stage != stage and not manual_input:
                raise StageError(
                    f"independent mode requires manual_input=true to access the {stage} stage out of order"
                )
            return
        if session.stage != stage:
            raise StageError(
                f"session is at stage {session.stage!r}; the {stage!r} stage is not active"
            )

    # -- operations ------------------------------------------------------------
    def create_session(self, mode: str = "sequential", actor: str = "human") -> dict:
        if mode not in ("sequential", "independent"):
            raise ValueError(f"unknown mode {mode!r}")
        session_id = self.id_factory()
        with self._lock(session_id):
            event = self.store.append(
                session_id, actor, "created", {"session_id": session_id, "mode": mode}
            )
            session = apply_event(None, event)
            self._sessions[session_id] = session
            state = self.backend.start_intake(session_id)
            self._record(session, actor, "dialogue-updated", {"dialogue_state": state})
        prompt = self._current_prompt(state)
        return {"session_id": session_id, "stage": session.stage, "mode": mode, "prompt": prompt}

    @staticmethod
    def _current_prompt(state: dict) -> Optional[dict]:
        for turn in reversed(state.get("turns", [])):
            if turn["speaker"] == "agent" and turn.get("key"):
                return {"key": turn["key"], "text": turn["text"]}
        return None

    def answer(self, session_id: str, text: str, actor: str = "human") -> dict:
        with self._lock(session_id):
            session = self._get(session_id)
            self._require_stage(session, "intake", manual_input=False)
            if session.dialogue_state is None:
                raise StageError("session has no dialogue state")
            new_state = self.backend.intake_answer(session.dialogue_state, text)
            self._record(session, actor, "dialogue-updated", {"dialogue_state": new_state})
            self._maybe_store_report(session, actor)
        return {
            "prompt": self._current_prompt(new_state),
            "finished": new_state.get("finished", False),
            "pending": new_state.get("pending"),
        }

    def _maybe_store_report(self, session: PipelineSession, actor: str) -> None:
        state = session.dialogue_state or {}
        if state.get("finished") and "report" not in session.documents:
            report = self.backend.intake_report(state)
            self._record(
                session,
                actor,
                "document-set",
                {"kind": "report", "document": report, "version": 1},
            )

    def set_imaging(
        self, session_id: str, findings: dict, actor: str = "human", manual_input: bool = False
    ) -> dict:
        with self._lock(session_id):
            session = self._get(session_id)
            self._require_stage(session, "imaging", manual_input)
            state = session.dialogue_state
            if state is None:
                raise StageError("session has no dialogue state")
            new_state = self.backend.attach_imaging(state, findings)
            self._record(session, actor, "dialogue-updated", {"dialogue_state": new_state})
            self._record(
                session,
                actor,
                "document-set",
                {"kind": "imaging", "document": findings, "version": session.versions.get("imaging", 0) + 1},
            )
            self._maybe_store_report(session, actor)
        return {"stored": True, "version": session.versions["imaging"]}

    def get_document(self, session_id: str, kind: str) -> dict:
        session = self._get(session_id)
        if kind == "report" and "report" not in session.documents:
            with self._lock(session_id):
                self._maybe_store_report(session, actor="agent:assessment")
        if kind not in session.documents:
            raise StageError(f"document {kind!r} does not exist yet")
        doc = session.documents[kind]
        if kind in ("report", "risk-report", "plan"):
            validate_document(doc, kind)
        return {"document": doc, "version": session.versions[kind]}

    def edit_document(
        self, session_id: str, kind: str, document: dict, version: int, actor: str = "human"
    ) -> dict:
        with self._lock(session_id):
            session = self._get(session_id)
            if kind not in session.documents:
                raise StageError(f"document {kind!r} does not exist yet")
            current = session.versions[kind]
            if version != current:
                raise StaleVersion(f"stale version {version}; current is {current}")
            if kind in ("report", "risk-report", "plan"):
                validate_document(document, kind)
            diff = {
                "before_hash": stable_hash(session.documents[kind]),
                "after_hash": stable_hash(document),
            }
            self._record(
                session,
                actor,
                "document-edited",
                {"kind": kind, "document": document, "version": current + 1, "diff": diff},
            )
        return {"version": current + 1}

    def run_risk(self, session_id: str, actor: str = "human", manual_input: bool = False,
                 report: Optional[dict] = None) -> dict:
        with self._lock(session_id):
            session = self._get(session_id)
            self._require_stage(session, "risk", manual_input)
            source = report if (manual_input and report is not None) else session.documents.get("report")
            if source is None:
                raise StageError("no evaluation report available for risk prediction")
            doc = self.backend.risk_report(source)
            self._record(
                session,
                actor,
                "document-set",
                {"kind": "risk-report", "document": doc, "version": session.versions.get("risk-report", 0) + 1},
            )
        return {"document": doc, "version": session.versions["risk-report"]}

    def run_plan(self, session_id: str, actor: str = "human", manual_input: bool = False,
                 report: Optional[dict] = None, risk: Optional[dict] = None) -> dict:
        with self._lock(session_id):
            session = self._get(session_id)
            self._require_stage(session, "therapy", manual_input)
            source = report if (manual_input and report is not None) else session.documents.get("report")
            risk_doc = risk if (manual_input and risk is not None) else session.documents.get("risk-report")
            if source is None:
                raise StageError("no evaluation report available for planning")
            doc = self.backend.plan(source, risk_doc)
            self._record(
                session,
                actor,
                "document-set",
                {"kind": "plan", "document": doc, "version": session.versions.get("plan", 0) + 1},
            )
        return {"document": doc, "version": session.versions["plan"]}

    def approve(self, session_id: str, stage: str, actor: str = "human",
                elapsed_s: Optional[float] = None) -> dict:
        if stage not in STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        with self._lock(session_id):
            session = self._get(session_id)
            current_idx = session.stage_index()
            stage_idx = STAGES.index(stage)
            if stage_idx < current_idx:
                return {"stage": session.stage, "already_approved": True}
            if stage_idx > current_idx:
                raise StageError(
                    f"cannot approve stage {stage!r} while the session is at {session.stage!r}"
                )
            if stage == "intake":
                state = session.dialogue_state or {}
                pending = (state.get("pending") or {}).get("kind")
                if not state.get("finished") and pending != "imaging-wait":
                    raise StageError("intake is not complete enough to approve")
            payload = {"stage": stage, "next_stage": next_stage(stage)}
            if elapsed_s is not None:
                payload["elapsed_s"] = elapsed_s
            self._record(session, actor, "approved", payload)
        return {"stage": session.stage, "already_approved": False}

    def audit(self, session_id: str) -> dict:
        session = self._get(session_id)
        events = self.store.load(session.session_id)
        try:
            verify_chain(events)
            valid = True
        except StorageError:
            valid = False
        slim = [
            {k: e[k] for k in ("seq", "timestamp", "actor", "action", "payload_hash", "prev_hash", "hash")}
            for e in events
        ]
        return {"events": slim, "valid": valid, "edit_log": session.edit_log}


class StaleVersion(RuntimeError):
    pass


def create_app(
    backend=None,
    data_dir: Optional[str] = None,
    clock: Optional[Clock] = None,
    id_factory=None,
):
    """Build the FastAPI application around a session service."""
    import tempfile

    from fastapi import Body, FastAPI, Header, Request
    from fastapi.responses import JSONResponse

    store = EventStore(data_dir or tempfile.mkdtemp(prefix="kom-data-"), clock=clock)
    service = SessionService(store, backend=backend, clock=clock, id_factory=id_factory)
    app = FastAPI(title="kom", version="1")
    app.state.service = service

    @app.exception_handler(UnknownSession)
    async def _unknown(request: Request, exc: UnknownSession):
        return JSONResponse(status_code=404, content={"error": f"unknown session: {exc.args[0]}"})

    @app.exception_handler(StageError)
    async def _stage(request: Request, exc: StageError):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(StaleVersion)
    async def _stale(request: Request, exc: StaleVersion):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    @app.exception_handler(SchemaError)
    async def _schema(request: Request, exc: SchemaError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def _value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/sessions", status_code=201)
    def create_session(body: dict = Body(default={}), x_actor: str = Header(default="human")):
        return service.create_session(mode=body.get("mode", "sequential"), actor=x_actor)

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, body: dict = Body(...), x_actor: str = Header(default="human")):
        if "text" not in body:
            raise SchemaError("body must carry 'text'")
        return service.answer(session_id, body["text"], actor=x_actor)

    @app.post("/sessions/{session_id}/imaging")
    def imaging(session_id: str, body: dict = Body(...), x_actor: str = Header(default="human")):
        if "findings" not in body:
            raise SchemaError("body must carry 'findings'")
        return service.set_imaging(
            session_id, body["findings"], actor=x_actor, manual_input=body.get("manual_input", False)
        )

    @app.get("/sessions/{session_id}/report")
    def get_report(session_id: str):
        return service.get_document(session_id, "report")

    @app.put("/sessions/{session_id}/report")
    def put_report(session_id: str, body: dict = Body(...), x_actor: str = Header(default="human")):
        return _edit(session_id, "report", body, x_actor)

    def _edit(session_id: str, kind: str, body: dict, actor: str):
        if "document" not in body or "version" not in body:
            raise SchemaError("body must carry 'document' and 'version'")
        return service.edit_document(session_id, kind, body["document"], body["version"], actor=actor)

    @app.post("/sessions/{session_id}/risk")
    def risk(session_id: str, body: dict = Body(default={}), x_actor: str = Header(default="human")):
        return service.run_risk(
            session_id,
            actor=x_actor,
            manual_input=body.get("manual_input", False),
            report=body.get("report"),
        )

    @app.get("/sessions/{session_id}/risk-report")
    def get_risk(session_id: str):
        return service.get_document(session_id, "risk-report")

    @app.put("/sessions/{session_id}/risk-report")
    def put_risk(session_id: str, body: dict = Body(...), x_actor: str = Header(default="human")):
        return _edit(session_id, "risk-report", body, x_actor)

    @app.post("/sessions/{session_id}/plan")
    def plan(session_id: str, body: dict = Body(default={}), x_actor: str = Header(default="human")):
        return service.run_plan(
            session_id,
            actor=x_actor,
            manual_input=body.get("manual_input", False),
            report=body.get("report"),
            risk=body.get("risk_report"),
        )

    @app.get("/sessions/{session_id}/plan")
    def get_plan(session_id: str):
        return service.get_document(session_id, "plan")

    @app.put("/sessions/{session_id}/plan")
    def put_plan(session_id: str, body: dict = Body(...), x_actor: str = Header(default="human")):
        return _edit(session_id, "plan", body, x_actor)

    @app.post("/sessions/{session_id}/approve")
    def approve(session_id: str, body: dict = Body(...), x_actor: str = Header(default="human")):
        if "stage" not in body:
            raise SchemaError("body must carry 'stage'")
        return service.approve(
            session_id, body["stage"], actor=x_actor, elapsed_s=body.get("elapsed_s")
        )

    @app.get("/sessions/{session_id}/audit")
    def audit(session_id: str):
        return service.audit(session_id)

    return app
