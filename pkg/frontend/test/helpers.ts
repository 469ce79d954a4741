// Shared test plumbing: the recorded backend traffic plus scripted stand-ins
// for fetch and EventSource. No test in this suite talks to a live server;
// everything replays bytes captured by scripts/record-fixture.py.

import { readFileSync } from "node:fs";

import type { FetchLike } from "../src/api.js";
import { parseSseFrames } from "../src/sse.js";
import type { EventSourceLike, SourceFactory } from "../src/stream.js";

export interface Exchange {
  status: number;
  body: unknown;
}

export interface Recording {
  note: string;
  config: Record<string, unknown>;
  create: Exchange;
  create_invalid: Exchange;
  stream_leg1: string;
  leg1_last_seq: number;
  status_waiting: Exchange;
  input_stale: Exchange;
  input_accepted: Exchange;
  stream_leg2: string;
  input_not_waiting: Exchange;
  status_final: Exchange;
  stream_full: string;
  validate_invalid: Exchange;
  missing_session: Exchange;
}

export const recording: Recording = JSON.parse(
  readFileSync(new URL("./fixtures/human-debate-session.json", import.meta.url), "utf-8"),
);

export const SESSION_ID = (recording.create.body as { session_id: string }).session_id;

/** EventSource stand-in that replays raw SSE text on demand. */
export class FakeEventSource implements EventSourceLike {
  closed = false;
  private listeners = new Map<string, ((event: { data?: unknown }) => void)[]>();

  constructor(
    readonly url: string,
    private readonly rawText: string,
  ) {}

  addEventListener(type: string, listener: (event: { data?: unknown }) => void): void {
    const bucket = this.listeners.get(type) ?? [];
    bucket.push(listener);
    this.listeners.set(type, bucket);
  }

  /** Push every frame of the scripted text to its listeners. */
  deliver(): void {
    for (const frame of parseSseFrames(this.rawText)) {
      if (this.closed) return;
      for (const listener of this.listeners.get(frame.event || "message") ?? []) {
        listener({ data: frame.data });
      }
    }
  }

  /** Simulate a dropped connection. */
  fail(): void {
    for (const listener of this.listeners.get("error") ?? []) listener({});
  }

  close(): void {
    this.closed = true;
  }
}

/**
 * Source factory whose nth connection replays legs[n]; extra connections
 * repeat the last leg. Delivery is manual so tests can assert intermediate
 * states between legs.
 */
export function scriptedSources(legs: string[]): {
  factory: SourceFactory;
  created: FakeEventSource[];
} {
  const created: FakeEventSource[] = [];
  const factory: SourceFactory = (url) => {
    const leg = legs[Math.min(created.length, legs.length - 1)];
    const source = new FakeEventSource(url, leg);
    created.push(source);
    return source;
  };
  return { factory, created };
}

export interface Route {
  method: string;
  path: string;
  /** Consumed in order; the last one repeats. */
  responses: Exchange[];
}

export interface RecordedCall {
  method: string;
  url: string;
  body?: unknown;
}

/**
 * fetch stand-in backed by a route table. Any request that does not match a
 * route throws, which doubles as the "no requests outside the documented
 * API" contract check.
 */
export function fakeFetch(routes: Route[]): {
  fetchFn: FetchLike;
  calls: RecordedCall[];
} {
  const calls: RecordedCall[] = [];
  const cursors = new Map<Route, number>();
  const fetchFn: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body !== undefined ? JSON.parse(init.body) : undefined;
    calls.push({ method, url, body });
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
    const route = routes.find((r) => r.method === method && r.path === path);
    if (route === undefined) {
      throw new Error(`unexpected request: ${method} ${url}`);
    }
    const at = cursors.get(route) ?? 0;
    const exchange = route.responses[Math.min(at, route.responses.length - 1)];
    cursors.set(route, at + 1);
    return { status: exchange.status, json: async () => exchange.body };
  };
  return { fetchFn, calls };
}

export function tick(ms = 5): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
