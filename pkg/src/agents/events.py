"""Append-only session event log.

Every observable step of a session becomes one SessionEvent with a dense
``seq`` (0, 1, 2, ...). Determinism contract: two runs of the same config
and script produce identical logs once timestamps are stripped, so payloads
carry only deterministic data (no latencies, no random ids).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

SESSION_STARTED = "SessionStarted"
STATE_ENTERED = "StateEntered"
AGENT_SELECTED = "AgentSelected"
HUMAN_INPUT_REQUESTED = "HumanInputRequested"
HUMAN_INPUT_RECEIVED = "HumanInputReceived"
ACTION_EMITTED = "ActionEmitted"
TOOL_INVOKED = "ToolInvoked"
TRANSIT_DECIDED = "TransitDecided"
MEMORY_UPDATED = "MemoryUpdated"
WARNING = "Warning"
SESSION_FINISHED = "SessionFinished"
SESSION_FAILED = "SessionFailed"

EVENT_KINDS = (
    SESSION_STARTED,
    STATE_ENTERED,
    AGENT_SELECTED,
    HUMAN_INPUT_REQUESTED,
    HUMAN_INPUT_RECEIVED,
    ACTION_EMITTED,
    TOOL_INVOKED,
    TRANSIT_DECIDED,
    MEMORY_UPDATED,
    WARNING,
    SESSION_FINISHED,
    SESSION_FAILED,
)

TERMINAL_KINDS = frozenset({SESSION_FINISHED, SESSION_FAILED})

# Warning payload codes.
INVALID_TRANSIT = "INVALID_TRANSIT"
INVALID_ROUTE = "INVALID_ROUTE"
MEMORY_FAILED = "MEMORY_FAILED"
MALFORMED_SOP_PATCH = "MALFORMED_SOP_PATCH"


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    kind: str
    ts: float
    payload: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "ts": self.ts,
                "payload": self.payload}

    @staticmethod
    def from_dict(raw: dict) -> "SessionEvent":
        return SessionEvent(seq=raw["seq"], kind=raw["kind"], ts=raw["ts"],
                            payload=raw.get("payload", {}))


class EventLog:
    """In-memory list plus optional ndjson file, with a listener hook for
    live streaming."""

    def __init__(self, path: str | Path | None = None, listener=None):
        self.events: list[SessionEvent] = []
        self.path = Path(path) if path is not None else None
        self.listener = listener
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("a", encoding="utf-8")

    def emit(self, kind: str, /, **payload) -> SessionEvent:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        event = SessionEvent(seq=len(self.events), kind=kind, ts=time.time(),
                             payload=payload)
        self.events.append(event)
        if self._fh is not None:
            self._fh.write(json.dumps(event.to_dict(), ensure_ascii=False,
                                      sort_keys=True) + "\n")
            self._fh.flush()
        if self.listener is not None:
            self.listener(event)
        return event

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @property
    def finished(self) -> bool:
        return bool(self.events) and self.events[-1].kind in TERMINAL_KINDS


def comparable(events: list[SessionEvent]) -> list[dict]:
    """Determinism view: everything except timestamps."""
    return [{"seq": e.seq, "kind": e.kind, "payload": e.payload} for e in events]


def load_events(path: str | Path) -> list[SessionEvent]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            out.append(SessionEvent.from_dict(json.loads(line)))
    return out
