/** HTTP client for the pipeline service; the console's only data channel. */

import type {
  AnswerResult,
  ApproveResult,
  AuditTrail,
  DocumentKind,
  SessionInfo,
  VersionedDocument,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** 409 on a PUT whose version lagged the server document. */
export class StaleVersionError extends ApiError {}

/** 409 from opening or mutating a stage out of order. */
export class StageOrderError extends ApiError {}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
    private readonly actor: string = "clinician",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: {
        "Content-Type": "application/json",
        "X-Actor": this.actor,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : {};
    if (!response.ok) {
      const message = (payload as { error?: string }).error ?? response.statusText;
      if (response.status === 409) {
        if (/stale version/i.test(message)) {
          throw new StaleVersionError(response.status, message);
        }
        throw new StageOrderError(response.status, message);
      }
      throw new ApiError(response.status, message);
    }
    return payload as T;
  }

  createSession(mode: "sequential" | "independent" = "sequential"): Promise<SessionInfo> {
    return this.request<SessionInfo>("POST", "/sessions", { mode });
  }

  answer(sessionId: string, text: string): Promise<AnswerResult> {
    return this.request<AnswerResult>("POST", `/sessions/${sessionId}/answer`, { text });
  }

  attachImaging(sessionId: string, findings: unknown): Promise<{ stored: boolean; version: number }> {
    return this.request("POST", `/sessions/${sessionId}/imaging`, { findings });
  }

  getDocument(sessionId: string, kind: DocumentKind): Promise<VersionedDocument> {
    return this.request<VersionedDocument>("GET", `/sessions/${sessionId}/${kind}`);
  }

  putDocument(
    sessionId: string,
    kind: DocumentKind,
    document: Record<string, unknown>,
    version: number,
  ): Promise<{ version: number }> {
    return this.request("PUT", `/sessions/${sessionId}/${kind}`, { document, version });
  }

  runRisk(sessionId: string): Promise<VersionedDocument> {
    return this.request<VersionedDocument>("POST", `/sessions/${sessionId}/risk`, {});
  }

  runPlan(sessionId: string): Promise<VersionedDocument> {
    return this.request<VersionedDocument>("POST", `/sessions/${sessionId}/plan`, {});
  }

  approve(sessionId: string, stage: string, elapsedSeconds?: number): Promise<ApproveResult> {
    const body: Record<string, unknown> = { stage };
    if (elapsedSeconds !== undefined) {
      body.elapsed_s = elapsedSeconds;
    }
    return this.request<ApproveResult>("POST", `/sessions/${sessionId}/approve`, body);
  }

  audit(sessionId: string): Promise<AuditTrail> {
    return this.request<AuditTrail>("GET", `/sessions/${sessionId}/audit`);
  }
}
