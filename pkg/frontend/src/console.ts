/**
 * Headless console controller: owns the session view, the stream
 * subscription, and the input-box lifecycle. The DOM layer (main.ts) only
 * renders `state` and forwards user actions; tests drive this class
 * directly against recorded traffic.
 */

import type { ApiClient } from "./api.js";
import { SessionStream, type SourceFactory, type StreamStatus } from "./stream.js";
import {
  applyEvent,
  emptyView,
  markHuman,
  type SessionView,
} from "./timeline.js";
import type { SessionEvent, ValidationReport } from "./types.js";

export interface ConsoleState {
  view: SessionView;
  /** Short user-facing messages, newest last. */
  toasts: string[];
  /** True while a submitted turn has not yet produced HumanInputReceived. */
  submitting: boolean;
  streamStatus: StreamStatus;
  notFound: boolean;
}

export type SubmitTurnResult =
  | "accepted"
  | "blocked"
  | "stale_request"
  | "not_waiting";

export interface CreateOutcome {
  sessionId?: string;
  report?: ValidationReport;
  parseError?: string;
}

export interface ConsoleOptions {
  api: ApiClient;
  makeSource?: SourceFactory;
  retryDelayMs?: number;
  onChange?: (state: ConsoleState) => void;
}

export class SessionConsole {
  state: ConsoleState;
  private stream: SessionStream | null = null;
  private readonly api: ApiClient;
  private readonly makeSource?: SourceFactory;
  private readonly retryDelayMs?: number;
  private readonly onChange: (state: ConsoleState) => void;

  constructor(options: ConsoleOptions) {
    this.api = options.api;
    this.makeSource = options.makeSource;
    this.retryDelayMs = options.retryDelayMs;
    this.onChange = options.onChange ?? (() => {});
    this.state = {
      view: emptyView(""),
      toasts: [],
      submitting: false,
      streamStatus: "idle",
      notFound: false,
    };
  }

  private changed(): void {
    this.onChange(this.state);
  }

  private toast(message: string): void {
    this.state = { ...this.state, toasts: [...this.state.toasts, message] };
    this.changed();
  }

  /**
   * Parse config text, create the session, and start following it. On a 422
   * the validation report is returned for inline rendering and no view
   * changes; unparseable JSON never reaches the server.
   */
  async createFromConfigText(text: string): Promise<CreateOutcome> {
    let config: unknown;
    try {
      config = JSON.parse(text);
    } catch (error) {
      return { parseError: error instanceof Error ? error.message : String(error) };
    }
    const result = await this.api.createSession(config);
    if (!result.ok) return { report: result.report };
    await this.open(result.sessionId, humanAgentNames(config));
    return { sessionId: result.sessionId };
  }

  /**
   * Follow an existing session from seq 0. `humanAgents` seeds the is_human
   * badges when the caller knows the config; otherwise badges flip as
   * human-input events arrive.
   */
  async open(sessionId: string, humanAgents: string[] = []): Promise<void> {
    this.stream?.close();
    const status = await this.api.sessionStatus(sessionId);
    if (status === null) {
      this.state = {
        view: emptyView(sessionId),
        toasts: this.state.toasts,
        submitting: false,
        streamStatus: "idle",
        notFound: true,
      };
      this.changed();
      return;
    }
    this.state = {
      view: markHuman(emptyView(sessionId), humanAgents),
      toasts: [],
      submitting: false,
      streamStatus: "idle",
      notFound: false,
    };
    this.stream = new SessionStream(
      (fromSeq) => this.api.streamUrl(sessionId, fromSeq),
      (event) => this.handleEvent(event),
      {
        makeSource: this.makeSource,
        retryDelayMs: this.retryDelayMs,
        onStatus: (streamStatus) => {
          this.state = { ...this.state, streamStatus };
          this.changed();
        },
      },
    );
    this.stream.start(0);
  }

  private handleEvent(event: SessionEvent): void {
    const view = applyEvent(this.state.view, event);
    let submitting = this.state.submitting;
    if (event.kind === "HumanInputReceived") submitting = false;
    this.state = { ...this.state, view, submitting };
    this.changed();
  }

  /**
   * Submit the pending human turn. Empty input and input with no pending
   * request are blocked client-side. A 409 raises a toast with the reason
   * and re-enables the box; on 202 the box stays disabled until the matching
   * HumanInputReceived arrives on the stream.
   */
  async submitTurn(text: string): Promise<SubmitTurnResult> {
    const pending = this.state.view.pendingInput;
    if (pending === null || this.state.submitting || text.trim() === "") {
      return "blocked";
    }
    this.state = { ...this.state, submitting: true };
    this.changed();
    const result = await this.api.submitInput(
      this.state.view.sessionId,
      pending.requestId,
      text,
    );
    if (!result.accepted) {
      this.state = { ...this.state, submitting: false };
      this.toast(`input rejected: ${result.outcome}`);
      return result.outcome;
    }
    return "accepted";
  }

  close(): void {
    this.stream?.close();
    this.stream = null;
  }
}

/** Names of agents marked is_human in a config document. */
export function humanAgentNames(config: unknown): string[] {
  if (typeof config !== "object" || config === null) return [];
  const agents = (config as Record<string, unknown>)["agents"];
  if (typeof agents !== "object" || agents === null) return [];
  const names: string[] = [];
  for (const [name, spec] of Object.entries(agents)) {
    if (
      typeof spec === "object" &&
      spec !== null &&
      (spec as Record<string, unknown>)["is_human"] === true
    ) {
      names.push(name);
    }
  }
  return names;
}
