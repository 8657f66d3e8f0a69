/** Documents and payloads exchanged with the pipeline service (schema v1). */

export type Stage = "intake" | "imaging" | "risk" | "therapy" | "done";

export const STAGES: Stage[] = ["intake", "imaging", "risk", "therapy", "done"];

export type DocumentKind = "report" | "risk-report" | "plan";

/** Which stage owns each reviewable document. */
export const DOCUMENT_STAGE: Record<DocumentKind, Stage> = {
  report: "intake",
  "risk-report": "risk",
  plan: "therapy",
};

export interface VersionedDocument {
  document: Record<string, unknown>;
  version: number;
}

export interface SessionInfo {
  session_id: string;
  stage: Stage;
  mode: "sequential" | "independent";
  prompt: Prompt | null;
}

export interface Prompt {
  key: string;
  text: string;
}

export interface AnswerResult {
  prompt: Prompt | null;
  finished: boolean;
  pending?: { kind: string } | null;
}

export interface ApproveResult {
  stage: Stage;
  already_approved: boolean;
}

export interface AuditEvent {
  seq: number;
  timestamp: string;
  actor: string;
  action: string;
  payload_hash: string;
  prev_hash: string;
  hash: string;
}

export interface AuditTrail {
  events: AuditEvent[];
  valid: boolean;
  edit_log: Array<{
    stage: Stage;
    editor: string;
    diff: { before_hash: string; after_hash: string };
    timestamp: string;
    approved: boolean;
  }>;
}

export interface ForceContribution {
  feature: string;
  value: number | null;
  contribution: number;
}

export interface RiskTaskSection {
  unavailable: boolean;
  prediction?: number;
  cohort_mean?: number | null;
  below_cohort_mean?: boolean;
  top_positive?: ForceContribution[];
  top_negative?: ForceContribution[];
}

export interface RiskReport {
  schema_version: number;
  report_id: string;
  tasks: Record<string, RiskTaskSection>;
  force_plots: Record<string, ForceContribution[]>;
}

/** Time fields exported per arm for the comparison harness. */
export interface ArmTimePayload {
  arm: string;
  times: number[];
  time_mean: number;
  time_sd: number | null;
}
