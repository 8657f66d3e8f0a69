/** Stage-by-stage review workflow: server documents, local edits, approvals.
 *
 * The server stays the single authority: local buffers exist only between an
 * edit and its PUT, saves re-fetch the stored document, and reloading the
 * workflow rebuilds every view from the service.
 */

import { ApiClient, StageOrderError, StaleVersionError } from "./api.js";
import { TimingCapture } from "./timing.js";
import type { DocumentKind, Prompt, Stage, VersionedDocument } from "./types.js";
import { DOCUMENT_STAGE, STAGES } from "./types.js";

export interface StageView {
  stage: Stage;
  document: Record<string, unknown> | null;
  version: number | null;
  buffer: Record<string, unknown> | null;
  dirty: boolean;
  elapsedSeconds: number;
}

export class WorkflowError extends Error {}

export class SessionWorkflow {
  private sessionId: string | null = null;
  private stage: Stage = "intake";
  private prompt: Prompt | null = null;
  private views = new Map<DocumentKind, StageView>();
  public networkBanner: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly timing: TimingCapture,
  ) {}

  get currentStage(): Stage {
    return this.stage;
  }

  get currentPrompt(): Prompt | null {
    return this.prompt;
  }

  get id(): string {
    if (this.sessionId === null) {
      throw new WorkflowError("no session started");
    }
    return this.sessionId;
  }

  /** Stages the UI may open: everything at or before the server stage. */
  stageUnlocked(stage: Stage): boolean {
    return STAGES.indexOf(stage) <= STAGES.indexOf(this.stage);
  }

  async start(mode: "sequential" | "independent" = "sequential"): Promise<void> {
    const info = await this.api.createSession(mode);
    this.sessionId = info.session_id;
    this.stage = info.stage;
    this.prompt = info.prompt;
    this.timing.openStage("intake");
  }

  async answer(text: string): Promise<boolean> {
    const result = await this.withRetryBanner(() => this.api.answer(this.id, text));
    this.prompt = result.prompt;
    return result.finished || result.pending?.kind === "imaging-wait";
  }

  openStage(stage: Stage): void {
    if (!this.stageUnlocked(stage)) {
      throw new WorkflowError(
        `stage ${stage} is locked until ${this.stage} is approved`,
      );
    }
    this.timing.openStage(stage);
  }

  view(kind: DocumentKind): StageView {
    const existing = this.views.get(kind);
    if (existing) {
      return existing;
    }
    const fresh: StageView = {
      stage: DOCUMENT_STAGE[kind],
      document: null,
      version: null,
      buffer: null,
      dirty: false,
      elapsedSeconds: 0,
    };
    this.views.set(kind, fresh);
    return fresh;
  }

  async fetchDocument(kind: DocumentKind): Promise<StageView> {
    const served = await this.withRetryBanner(() => this.api.getDocument(this.id, kind));
    const view = this.view(kind);
    view.document = served.document;
    view.version = served.version;
    view.buffer = structuredClone(served.document);
    view.dirty = false;
    return view;
  }

  /** Mutate the local buffer; save stays disabled until something changed. */
  edit(kind: DocumentKind, mutate: (draft: Record<string, unknown>) => void): StageView {
    const view = this.view(kind);
    if (view.buffer === null) {
      throw new WorkflowError(`fetch the ${kind} document before editing`);
    }
    mutate(view.buffer);
    view.dirty = JSON.stringify(view.buffer) !== JSON.stringify(view.document);
    return view;
  }

  get canSave(): (kind: DocumentKind) => boolean {
    return (kind) => this.views.get(kind)?.dirty === true;
  }

  async save(kind: DocumentKind): Promise<StageView> {
    const view = this.view(kind);
    if (!view.dirty || view.buffer === null || view.version === null) {
      throw new WorkflowError("nothing to save");
    }
    // StaleVersionError propagates so the caller can refetch and reapply.
    await this.api.putDocument(this.id, kind, view.buffer, view.version);
    return this.fetchDocument(kind); // server copy becomes the authority
  }

  async runRisk(): Promise<VersionedDocument> {
    return this.withRetryBanner(() => this.api.runRisk(this.id));
  }

  async runPlan(): Promise<VersionedDocument> {
    return this.withRetryBanner(() => this.api.runPlan(this.id));
  }

  async attachImaging(findings: unknown): Promise<void> {
    await this.withRetryBanner(() => this.api.attachImaging(this.id, findings));
  }

  /** Approve the current stage; idempotent on repeated clicks. */
  async approve(stage: Stage): Promise<Stage> {
    this.timing.stopStage(stage);
    const result = await this.api.approve(
      this.id,
      stage,
      this.timing.stageSeconds(stage) || undefined,
    );
    this.stage = result.stage;
    if (this.stage !== "done") {
      this.timing.openStage(this.stage);
    }
    return this.stage;
  }

  /** Rebuild all state from the server (page reload semantics). */
  async reload(): Promise<void> {
    const trail = await this.api.audit(this.id);
    let stage: Stage = "intake";
    for (const event of trail.events) {
      if (event.action === "approved") {
        const index = STAGES.indexOf(stage);
        stage = STAGES[Math.min(index + 1, STAGES.length - 1)] ?? stage;
      }
    }
    this.stage = stage;
    for (const kind of [...this.views.keys()]) {
      if (this.views.get(kind)?.document !== null) {
        await this.fetchDocument(kind);
      }
    }
  }

  private async withRetryBanner<T>(operation: () => Promise<T>): Promise<T> {
    try {
      const result = await operation();
      this.networkBanner = null;
      return result;
    } catch (error) {
      if (error instanceof StageOrderError || error instanceof StaleVersionError) {
        throw error; // semantic errors are not network failures
      }
      if (error instanceof TypeError || (error as { status?: number }).status === undefined) {
        // network failure: keep local data, show the retry banner once
        this.networkBanner = "connection lost - your edits are kept locally; retry when online";
        try {
          const retried = await operation();
          this.networkBanner = null;
          return retried;
        } catch (second) {
          throw second;
        }
      }
      throw error;
    }
  }
}
