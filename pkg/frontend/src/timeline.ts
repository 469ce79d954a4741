/**
 * Pure session-view reducer: a fold over SessionEvents.
 *
 * Every event maps to exactly one timeline item, so the rendered seq set
 * always equals the set of events applied; nothing is dropped or merged.
 * StateEntered becomes a section divider, ActionEmitted a chat bubble,
 * ToolInvoked a collapsible detail row, and everything else a one-line
 * notice. Event seqs are dense per session, which makes `seq <= lastSeq`
 * a sufficient duplicate guard across stream reconnects.
 */

import type { SessionEvent } from "./types.js";

export interface ToolCallRef {
  tool: string;
  digest: string;
}

export type TimelineItem =
  | { type: "divider"; seq: number; state: string }
  | {
      type: "bubble";
      seq: number;
      agent: string;
      state: string;
      turnIndex: number;
      text: string;
      human: boolean;
      toolCalls: ToolCallRef[];
    }
  | {
      type: "tool";
      seq: number;
      agent: string;
      tool: string;
      ok: boolean;
      digest: string;
      params: Record<string, unknown>;
    }
  | { type: "notice"; seq: number; label: string; detail: string };

export interface AgentBadge {
  name: string;
  isHuman: boolean;
}

export interface PendingInput {
  requestId: string;
  agent: string;
  state: string;
  summary: string;
}

export type ViewStatus = "running" | "waiting_input" | "finished" | "failed";

export interface SessionView {
  sessionId: string;
  status: ViewStatus;
  currentState: string | null;
  agents: AgentBadge[];
  timeline: TimelineItem[];
  pendingInput: PendingInput | null;
  /** Highest applied seq, -1 before the first event. */
  lastSeq: number;
  /** Every applied seq in arrival order. */
  seqs: number[];
}

export function emptyView(sessionId: string): SessionView {
  return {
    sessionId,
    status: "running",
    currentState: null,
    agents: [],
    timeline: [],
    pendingInput: null,
    lastSeq: -1,
    seqs: [],
  };
}

/**
 * Mark agents as human up front, for consoles that created the session and
 * saw `is_human` in the config. Unknown names are added as badges so the
 * flag survives an out-of-order SessionStarted.
 */
export function markHuman(view: SessionView, names: string[]): SessionView {
  if (names.length === 0) return view;
  const agents = [...view.agents];
  for (const name of names) {
    const at = agents.findIndex((badge) => badge.name === name);
    if (at === -1) agents.push({ name, isHuman: true });
    else agents[at] = { ...agents[at], isHuman: true };
  }
  return { ...view, agents };
}

function str(payload: Record<string, unknown>, key: string): string {
  const value = payload[key];
  return typeof value === "string" ? value : "";
}

function withHumanAgent(view: SessionView, name: string): SessionView {
  if (!name) return view;
  const at = view.agents.findIndex((badge) => badge.name === name);
  if (at !== -1 && view.agents[at].isHuman) return view;
  return markHuman(view, [name]);
}

function transitDetail(payload: Record<string, unknown>): string {
  const decision = str(payload, "decision");
  const from = str(payload, "from_state");
  let detail: string;
  if (decision === "move") detail = `move ${from} to ${str(payload, "to_state")}`;
  else if (decision === "finish") detail = `finish from ${from}`;
  else detail = `stay in ${from}`;
  if (payload["forced"] === true) detail += " (forced)";
  if (payload["fallback"] === true) detail += " (fallback)";
  return detail;
}

function itemFor(event: SessionEvent): TimelineItem {
  const p = event.payload;
  switch (event.kind) {
    case "StateEntered":
      return { type: "divider", seq: event.seq, state: str(p, "state") };
    case "ActionEmitted": {
      const calls = Array.isArray(p["tool_calls"]) ? p["tool_calls"] : [];
      return {
        type: "bubble",
        seq: event.seq,
        agent: str(p, "agent"),
        state: str(p, "state"),
        turnIndex: typeof p["turn_index"] === "number" ? p["turn_index"] : 0,
        text: str(p, "content"),
        human: p["is_human_supplied"] === true,
        toolCalls: calls.map((call) => {
          const c = call as Record<string, unknown>;
          return {
            tool: typeof c["tool_name"] === "string" ? c["tool_name"] : "?",
            digest: typeof c["result_digest"] === "string" ? c["result_digest"] : "",
          };
        }),
      };
    }
    case "ToolInvoked":
      return {
        type: "tool",
        seq: event.seq,
        agent: str(p, "agent"),
        tool: str(p, "tool"),
        ok: p["ok"] === true,
        digest: str(p, "result_digest"),
        params: (p["params"] ?? {}) as Record<string, unknown>,
      };
    case "SessionStarted": {
      const agents = Array.isArray(p["agents"]) ? p["agents"].length : 0;
      return {
        type: "notice",
        seq: event.seq,
        label: "session started",
        detail: `${agents} agents, initial state ${str(p, "initial_state")}`,
      };
    }
    case "AgentSelected":
      return {
        type: "notice",
        seq: event.seq,
        label: "turn",
        detail: `${str(p, "agent")} acts in ${str(p, "state")}`,
      };
    case "TransitDecided":
      return { type: "notice", seq: event.seq, label: "transit", detail: transitDetail(p) };
    case "MemoryUpdated":
      return {
        type: "notice",
        seq: event.seq,
        label: "memory",
        detail: `${str(p, "agent")} ${str(p, "kind")}`,
      };
    case "HumanInputRequested":
      return {
        type: "notice",
        seq: event.seq,
        label: "your turn",
        detail: `${str(p, "agent")} waits for input (${str(p, "request_id")})`,
      };
    case "HumanInputReceived":
      return {
        type: "notice",
        seq: event.seq,
        label: "input received",
        detail: `${str(p, "agent")} continues`,
      };
    case "Warning":
      return {
        type: "notice",
        seq: event.seq,
        label: str(p, "code") || "warning",
        detail: str(p, "message"),
      };
    case "SessionFinished":
      return {
        type: "notice",
        seq: event.seq,
        label: "session finished",
        detail: str(p, "reason"),
      };
    case "SessionFailed":
      return {
        type: "notice",
        seq: event.seq,
        label: "session failed",
        detail: `${str(p, "error")}: ${str(p, "message")}`,
      };
    default:
      return { type: "notice", seq: event.seq, label: event.kind, detail: "" };
  }
}

/** Apply one event; returns the same view object for already-seen seqs. */
export function applyEvent(view: SessionView, event: SessionEvent): SessionView {
  if (event.seq <= view.lastSeq) return view;

  let next: SessionView = {
    ...view,
    timeline: [...view.timeline, itemFor(event)],
    seqs: [...view.seqs, event.seq],
    lastSeq: event.seq,
  };
  const p = event.payload;

  switch (event.kind) {
    case "SessionStarted": {
      const names = Array.isArray(p["agents"])
        ? p["agents"].filter((n): n is string => typeof n === "string")
        : [];
      const known = new Map(next.agents.map((badge) => [badge.name, badge.isHuman]));
      next.agents = names.map((name) => ({
        name,
        isHuman: known.get(name) ?? false,
      }));
      break;
    }
    case "StateEntered":
      next.currentState = str(p, "state");
      break;
    case "ActionEmitted":
      if (p["is_human_supplied"] === true) {
        next = withHumanAgent(next, str(p, "agent"));
      }
      break;
    case "HumanInputRequested":
      next = withHumanAgent(next, str(p, "agent"));
      next.pendingInput = {
        requestId: str(p, "request_id"),
        agent: str(p, "agent"),
        state: str(p, "state"),
        summary: str(p, "summary"),
      };
      next.status = "waiting_input";
      break;
    case "HumanInputReceived":
      next.pendingInput = null;
      next.status = "running";
      break;
    case "SessionFinished":
      next.pendingInput = null;
      next.status = "finished";
      break;
    case "SessionFailed":
      next.pendingInput = null;
      next.status = "failed";
      break;
  }
  return next;
}

export function applyAll(view: SessionView, events: Iterable<SessionEvent>): SessionView {
  let current = view;
  for (const event of events) current = applyEvent(current, event);
  return current;
}
