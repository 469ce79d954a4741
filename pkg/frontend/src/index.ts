export { ApiClient, ApiError } from "./api.js";
export type { CreateResult, FetchLike, HttpResponseLike, SubmitResult } from "./api.js";
export { SessionConsole, humanAgentNames } from "./console.js";
export type { ConsoleOptions, ConsoleState, CreateOutcome, SubmitTurnResult } from "./console.js";
export { escapeHtml, renderConsole, renderItem, renderReport, renderTimeline } from "./render.js";
export { parseSseFrames, sessionEvents } from "./sse.js";
export type { SseFrame } from "./sse.js";
export { SessionStream } from "./stream.js";
export type { EventSourceLike, SourceFactory, StreamOptions, StreamStatus } from "./stream.js";
export { applyAll, applyEvent, emptyView, markHuman } from "./timeline.js";
export type {
  AgentBadge,
  PendingInput,
  SessionView,
  TimelineItem,
  ToolCallRef,
  ViewStatus,
} from "./timeline.js";
export { asSessionEvent, TERMINAL_KINDS } from "./types.js";
export type {
  EventKind,
  GenerateResult,
  Issue,
  SessionEvent,
  SessionStatus,
  SubmitOutcome,
  ValidationReport,
  WaitingInput,
} from "./types.js";
