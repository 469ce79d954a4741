// Wire types for the backend's HTTP+SSE API. Field names follow the JSON
// exactly (snake_case); the view layer translates to its own shapes.

export type EventKind =
  | "SessionStarted"
  | "StateEntered"
  | "AgentSelected"
  | "ActionEmitted"
  | "TransitDecided"
  | "ToolInvoked"
  | "MemoryUpdated"
  | "HumanInputRequested"
  | "HumanInputReceived"
  | "Warning"
  | "SessionFinished"
  | "SessionFailed";

export interface SessionEvent {
  seq: number;
  kind: EventKind;
  ts: number;
  payload: Record<string, unknown>;
}

export const TERMINAL_KINDS: ReadonlySet<string> = new Set([
  "SessionFinished",
  "SessionFailed",
]);

export interface Issue {
  path: string;
  code: string;
  message: string;
}

export interface ValidationReport {
  ok: boolean;
  errors: Issue[];
  warnings: Issue[];
}

/** `waiting` block of a session status response. */
export interface WaitingInput {
  request_id: string;
  agent: string;
  state: string;
  summary: string;
}

export interface SessionStatus {
  session_id: string;
  status: "running" | "waiting_input" | "finished" | "failed";
  last_seq: number;
  waiting: WaitingInput | null;
}

export type SubmitOutcome = "accepted" | "stale_request" | "not_waiting";

export interface GenerateResult {
  ok: boolean;
  document: Record<string, unknown> | null;
  attempts: number;
  exemplars_used: string[];
  errors: Issue[];
  warnings: Issue[];
}

export function asSessionEvent(raw: unknown): SessionEvent {
  const record = raw as Partial<SessionEvent>;
  if (
    typeof record !== "object" ||
    record === null ||
    typeof record.seq !== "number" ||
    typeof record.kind !== "string"
  ) {
    throw new Error(`not a session event: ${JSON.stringify(raw)}`);
  }
  return {
    seq: record.seq,
    kind: record.kind as EventKind,
    ts: typeof record.ts === "number" ? record.ts : 0,
    payload: (record.payload ?? {}) as Record<string, unknown>,
  };
}
