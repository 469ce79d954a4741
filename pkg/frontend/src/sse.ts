/**
 * Minimal server-sent-events text parser.
 *
 * The backend emits frames of the form
 *
 *     event: session
 *     data: {"seq": 0, "kind": "SessionStarted", ...}
 *
 * separated by blank lines. This parser covers the subset of the SSE wire
 * format the backend can produce plus comment lines and CRLF endings, and is
 * used by the tests to replay recorded traffic through the same code path a
 * live EventSource would feed.
 */

import { asSessionEvent, type SessionEvent } from "./types.js";

export interface SseFrame {
  /** Event name from the `event:` field; empty string means unnamed. */
  event: string;
  /** Concatenated `data:` lines, joined with newlines. */
  data: string;
}

/** Parse a block of raw SSE text into dispatched frames. */
export function parseSseFrames(text: string): SseFrame[] {
  const frames: SseFrame[] = [];
  let eventName = "";
  let dataLines: string[] = [];

  const dispatch = () => {
    if (dataLines.length > 0) {
      frames.push({ event: eventName, data: dataLines.join("\n") });
    }
    eventName = "";
    dataLines = [];
  };

  for (const rawLine of text.split(/\r\n|\r|\n/)) {
    if (rawLine === "") {
      dispatch();
      continue;
    }
    if (rawLine.startsWith(":")) continue; // comment / keep-alive
    const colon = rawLine.indexOf(":");
    const field = colon === -1 ? rawLine : rawLine.slice(0, colon);
    let value = colon === -1 ? "" : rawLine.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);
    if (field === "event") {
      eventName = value;
    } else if (field === "data") {
      dataLines.push(value);
    }
    // id / retry / unknown fields are irrelevant here
  }
  dispatch(); // stream may end without a trailing blank line
  return frames;
}

/** Decode every `session` frame in raw SSE text into a SessionEvent. */
export function sessionEvents(text: string): SessionEvent[] {
  return parseSseFrames(text)
    .filter((frame) => frame.event === "session")
    .map((frame) => asSessionEvent(JSON.parse(frame.data)));
}
