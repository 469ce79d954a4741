/**
 * Reconnecting subscription to a session's event stream.
 *
 * Wraps an EventSource-shaped transport and keeps a cursor of the last seq
 * seen. On error it reopens the stream at `from_seq = lastSeq + 1`, so a
 * dropped connection resumes without losing or duplicating events; frames
 * that somehow arrive twice are discarded by the cursor check. The stream
 * closes itself after a terminal event (SessionFinished / SessionFailed).
 *
 * The EventSource constructor is injectable: the browser entry point passes
 * nothing and gets the native implementation, tests pass a scripted fake.
 */

import { asSessionEvent, TERMINAL_KINDS, type SessionEvent } from "./types.js";

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: { data?: unknown }) => void): void;
  close(): void;
}

export type SourceFactory = (url: string) => EventSourceLike;

export type StreamStatus = "idle" | "live" | "reconnecting" | "closed";

export interface StreamOptions {
  makeSource?: SourceFactory;
  /** Delay before reopening after a drop. */
  retryDelayMs?: number;
  onStatus?: (status: StreamStatus) => void;
}

const defaultFactory: SourceFactory = (url) => new EventSource(url);

export class SessionStream {
  private source: EventSourceLike | null = null;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private lastSeq = -1;
  private stopped = false;
  private readonly makeSource: SourceFactory;
  private readonly retryDelayMs: number;
  private readonly onStatus: (status: StreamStatus) => void;

  constructor(
    private readonly urlFor: (fromSeq: number) => string,
    private readonly onEvent: (event: SessionEvent) => void,
    options: StreamOptions = {},
  ) {
    this.makeSource = options.makeSource ?? defaultFactory;
    this.retryDelayMs = options.retryDelayMs ?? 1000;
    this.onStatus = options.onStatus ?? (() => {});
  }

  start(fromSeq = 0): void {
    this.lastSeq = fromSeq - 1;
    this.stopped = false;
    this.open();
  }

  private open(): void {
    const source = this.makeSource(this.urlFor(this.lastSeq + 1));
    this.source = source;
    source.addEventListener("session", (frame) => {
      if (this.stopped || this.source !== source) return;
      const event = asSessionEvent(JSON.parse(String(frame.data)));
      if (event.seq <= this.lastSeq) return; // replayed overlap after resume
      this.lastSeq = event.seq;
      this.onEvent(event);
      if (TERMINAL_KINDS.has(event.kind)) this.close();
    });
    source.addEventListener("error", () => {
      if (this.stopped || this.source !== source) return;
      source.close();
      this.source = null;
      this.onStatus("reconnecting");
      this.retryTimer = setTimeout(() => {
        this.retryTimer = null;
        if (!this.stopped) this.open();
      }, this.retryDelayMs);
    });
    this.onStatus("live");
  }

  close(): void {
    this.stopped = true;
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    if (this.source !== null) {
      this.source.close();
      this.source = null;
    }
    this.onStatus("closed");
  }

  get closed(): boolean {
    return this.stopped;
  }
}
