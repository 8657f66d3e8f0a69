/** In-memory double of the pipeline service: stage order, versions, audit. */

import type { FetchLike } from "../src/api.js";
import type { DocumentKind, Stage } from "../src/types.js";
import { STAGES } from "../src/types.js";

interface SessionState {
  id: string;
  mode: "sequential" | "independent";
  stage: Stage;
  documents: Partial<Record<DocumentKind, Record<string, unknown>>>;
  versions: Partial<Record<DocumentKind, number>>;
  answers: string[];
  finished: boolean;
  audit: Array<{ seq: number; actor: string; action: string }>;
}

const DOCUMENT_STAGE: Record<DocumentKind, Stage> = {
  report: "intake",
  "risk-report": "risk",
  plan: "therapy",
};

export class MockService {
  sessions = new Map<string, SessionState>();
  private counter = 0;
  /** Requests that should fail once with a network error (path prefixes). */
  failNextMatching: string | null = null;

  private audit(state: SessionState, actor: string, action: string): void {
    state.audit.push({ seq: state.audit.length, actor, action });
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (this.failNextMatching !== null && path.startsWith(this.failNextMatching)) {
      this.failNextMatching = null;
      throw new TypeError("network down");
    }
    const body = init?.body ? (JSON.parse(init.body as string) as Record<string, unknown>) : {};
    const actor = (init?.headers as Record<string, string>)?.["X-Actor"] ?? "anonymous";
    const respond = (status: number, payload: unknown): Response =>
      new Response(JSON.stringify(payload), { status });

    if (method === "POST" && path === "/sessions") {
      const id = `mock-${this.counter++}`;
      const state: SessionState = {
        id,
        mode: (body.mode as "sequential" | "independent") ?? "sequential",
        stage: "intake",
        documents: {},
        versions: {},
        answers: [],
        finished: false,
        audit: [],
      };
      this.sessions.set(id, state);
      this.audit(state, actor, "created");
      return respond(201, {
        session_id: id,
        stage: state.stage,
        mode: state.mode,
        prompt: { key: "radiographs.available", text: "Are radiographs available?" },
      });
    }

    const match = path.match(/^\/sessions\/([^/]+)(?:\/(.*))?$/);
    if (!match) {
      return respond(404, { error: "no route" });
    }
    const state = this.sessions.get(match[1]!);
    if (!state) {
      return respond(404, { error: `unknown session: ${match[1]}` });
    }
    const tail = match[2] ?? "";

    if (method === "POST" && tail === "answer") {
      if (state.stage !== "intake") {
        return respond(409, { error: "session is past intake" });
      }
      state.answers.push(body.text as string);
      this.audit(state, actor, "dialogue-updated");
      state.finished = state.answers.length >= 2;
      if (state.finished && !state.documents.report) {
        state.documents.report = {
          schema_version: 1,
          report_id: `eval-${state.id}`,
          sections: { "chief-complaint-and-hpi": { narrative: "knee pain" } },
        };
        state.versions.report = 1;
        this.audit(state, "agent:assessment", "document-set");
      }
      return respond(200, {
        prompt: state.finished ? null : { key: "domain.demographics", text: "Demographics?" },
        finished: state.finished,
        pending: state.finished ? { kind: "done" } : { kind: "domain" },
      });
    }

    if (method === "POST" && tail === "imaging") {
      if (state.mode === "sequential" && state.stage !== "imaging") {
        return respond(409, { error: `stage ${state.stage} is not imaging` });
      }
      state.documents["risk-report"] = undefined as never;
      this.audit(state, actor, "document-set");
      return respond(200, { stored: true, version: 1 });
    }

    if (tail === "report" || tail === "risk-report" || tail === "plan") {
      const kind = tail as DocumentKind;
      if (method === "GET") {
        const document = state.documents[kind];
        if (!document) {
          return respond(409, { error: `document ${kind} does not exist yet` });
        }
        return respond(200, { document, version: state.versions[kind] });
      }
      if (method === "PUT") {
        const document = state.documents[kind];
        if (!document) {
          return respond(409, { error: `document ${kind} does not exist yet` });
        }
        if (body.version !== state.versions[kind]) {
          return respond(409, {
            error: `stale version ${body.version}; current is ${state.versions[kind]}`,
          });
        }
        state.documents[kind] = body.document as Record<string, unknown>;
        state.versions[kind] = (state.versions[kind] ?? 0) + 1;
        this.audit(state, actor, "document-edited");
        return respond(200, { version: state.versions[kind] });
      }
    }

    if (method === "POST" && (tail === "risk" || tail === "plan")) {
      const kind: DocumentKind = tail === "risk" ? "risk-report" : "plan";
      const required: Stage = tail === "risk" ? "risk" : "therapy";
      const manual = body.manual_input === true;
      if (state.mode === "sequential" && state.stage !== required) {
        return respond(409, { error: `stage ${state.stage}; ${required} not active` });
      }
      if (state.mode === "independent" && state.stage !== required && !manual) {
        return respond(409, { error: "manual_input required out of order" });
      }
      state.documents[kind] =
        kind === "risk-report"
          ? {
              schema_version: 1,
              report_id: `risk-${state.id}`,
              tasks: {
                koos_symptoms_left_v01: {
                  unavailable: false,
                  prediction: 72.18,
                  cohort_mean: 75.5,
                  below_cohort_mean: true,
                },
              },
              force_plots: {
                koos_symptoms_left_v01: [
                  { feature: "peak_knee_extension_torque_left", value: 86.0, contribution: 1.19 },
                  { feature: "osteophyte_score_left", value: 2.0, contribution: -1.08 },
                  { feature: "koos_pain_left", value: 61.0, contribution: -1.02 },
                ],
              },
            }
          : { schema_version: 1, plan_id: `plan-${state.id}`, sections: {} };
      state.versions[kind] = 1;
      this.audit(state, actor, "document-set");
      return respond(200, { document: state.documents[kind], version: 1 });
    }

    if (method === "POST" && tail === "approve") {
      const stage = body.stage as Stage;
      const currentIndex = STAGES.indexOf(state.stage);
      const requested = STAGES.indexOf(stage);
      if (requested < currentIndex) {
        return respond(200, { stage: state.stage, already_approved: true });
      }
      if (requested > currentIndex) {
        return respond(409, { error: `cannot approve ${stage} at ${state.stage}` });
      }
      state.stage = STAGES[Math.min(currentIndex + 1, STAGES.length - 1)]!;
      this.audit(state, actor, "approved");
      return respond(200, { stage: state.stage, already_approved: false });
    }

    if (method === "GET" && tail === "audit") {
      return respond(200, {
        events: state.audit.map((event) => ({
          ...event,
          timestamp: "2025-01-01T00:00:00+00:00",
          payload_hash: "x",
          prev_hash: "x",
          hash: "x",
        })),
        valid: true,
        edit_log: [],
      });
    }

    return respond(404, { error: `no route for ${method} ${path}` });
  };
}

export function editCount(service: MockService, sessionId: string): number {
  return (
    service.sessions.get(sessionId)?.audit.filter((e) => e.action === "document-edited").length ?? 0
  );
}

export function approvalCount(service: MockService, sessionId: string): number {
  return service.sessions.get(sessionId)?.audit.filter((e) => e.action === "approved").length ?? 0;
}
