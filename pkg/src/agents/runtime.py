"""Session runtime: the loop that drives a config to completion.

One SessionRuntime owns one session: its event log, provider gateway, tool
context, environment, SOP walker, and agents. ``run()`` alternates
controller steps and agent turns until the SOP finishes, writing every
observable step into the event log. Internal errors (including an exhausted
mock script) end the session with SessionFailed; partial logs, memory, and
transcripts are always persisted.

Human input flows through a provider: the Mailbox blocks the session thread
until ``submit_human_input`` delivers the matching request, and
CallbackProvider adapts a synchronous prompt function (the CLI wires stdin
through it).
"""

from __future__ import annotations

import json
import logging
import re
import threading
import uuid
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from . import events as ev
from .agent import Agent, HumanInputProvider
from .config import SystemConfig, config_digest
from .environment import Environment
from .gateway import ProviderGateway
from .sop import PatchError, Sop
from .tools import ToolContext, ToolRegistry, default_registry

log = logging.getLogger(__name__)

_PATCH_BLOCK = re.compile(r"```sop-patch\s*\n(.*?)```", re.DOTALL)

STATUS_FINISHED = "finished"
STATUS_FAILED = "failed"


class SubmitOutcome(Enum):
    ACCEPTED = "accepted"
    STALE_REQUEST = "stale_request"
    NOT_WAITING = "not_waiting"


class Mailbox(HumanInputProvider):
    """Thread-safe handoff between a blocked session and outside callers.

    The session thread calls ``open`` then ``wait``; any other thread calls
    ``submit``. Submissions are rejected when nothing is waiting
    (NOT_WAITING) or when they name the wrong / an already-answered request
    (STALE_REQUEST).
    """

    def __init__(self):
        self._cond = threading.Condition()
        self._counter = 0
        self.outstanding: dict | None = None
        self._delivery: tuple | None = None

    @property
    def waiting(self) -> bool:
        with self._cond:
            return self.outstanding is not None

    def open(self, agent: str, state: str, summary: str) -> str:
        with self._cond:
            request_id = f"req-{self._counter}"
            self._counter += 1
            self.outstanding = {"request_id": request_id, "agent": agent,
                                "state": state, "summary": summary}
            return request_id

    def wait(self, request_id: str) -> str:
        with self._cond:
            while self._delivery is None or self._delivery[0] != request_id:
                self._cond.wait()
            _, text = self._delivery
            self._delivery = None
            self.outstanding = None
            return text

    def submit(self, request_id: str, text: str) -> SubmitOutcome:
        with self._cond:
            if self.outstanding is None:
                return SubmitOutcome.NOT_WAITING
            if (request_id != self.outstanding["request_id"]
                    or self._delivery is not None):
                return SubmitOutcome.STALE_REQUEST
            self._delivery = (request_id, text)
            self._cond.notify_all()
            return SubmitOutcome.ACCEPTED


class CallbackProvider(HumanInputProvider):
    """Adapter for synchronous input sources: ``fn(request) -> str`` is
    called with the request payload and must return the human's text."""

    def __init__(self, fn):
        self.fn = fn
        self._counter = 0
        self._requests: dict = {}

    def open(self, agent: str, state: str, summary: str) -> str:
        request_id = f"req-{self._counter}"
        self._counter += 1
        self._requests[request_id] = {"request_id": request_id, "agent": agent,
                                      "state": state, "summary": summary}
        return request_id

    def wait(self, request_id: str) -> str:
        return self.fn(self._requests.pop(request_id))


def action_payload(action) -> dict:
    """The wire form of an Action: what ActionEmitted carries and what the
    transcript renderer consumes."""
    return {
        "agent": action.agent,
        "state": action.state,
        "turn_index": action.turn_index,
        "content": action.content,
        "tool_calls": [{
            "tool_name": c.tool_name,
            "params": c.params,
            "result_digest": c.result_digest,
        } for c in action.tool_calls],
        "is_human_supplied": action.is_human_supplied,
    }


def render_transcript(actions) -> str:
    """Markdown transcript from ActionEmitted-shaped dicts."""
    lines = ["# Session transcript", ""]
    for action in actions:
        suffix = " (human)" if action.get("is_human_supplied") else ""
        lines.append(f"### turn {action['turn_index']} - {action['agent']} "
                     f"@ {action['state']}{suffix}")
        lines.append("")
        lines.append(action["content"])
        lines.append("")
        calls = action.get("tool_calls") or []
        if calls:
            for call in calls:
                lines.append(f"- tool {call['tool_name']}: {call['result_digest']}")
            lines.append("")
    return "\n".join(lines)


def parse_new_states(content: str):
    """Extract a dynamic-planning patch from action text.

    Looks for a fenced ``sop-patch`` block whose body is JSON:
    ``{"states": {name: state-spec, ...}, "entry": name?}``. Returns
    ``(states, entry)`` or None when there is no block; a present but
    malformed block raises PatchError.
    """
    match = _PATCH_BLOCK.search(content)
    if match is None:
        return None
    try:
        body = json.loads(match.group(1))
    except ValueError as exc:
        raise PatchError(f"patch body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict) or not isinstance(body.get("states"), dict):
        raise PatchError("patch must be an object with a 'states' mapping")
    entry = body.get("entry")
    if entry is not None and not isinstance(entry, str):
        raise PatchError("patch 'entry' must be a state name")
    return body["states"], entry


@dataclass
class SessionResult:
    session_id: str
    status: str
    reason: str | None
    events: list

    @property
    def ok(self) -> bool:
        return self.status == STATUS_FINISHED


class SessionRuntime:
    def __init__(self, config: SystemConfig, *, session_id: str | None = None,
                 out_root: str | Path | None = None,
                 base_dir: str | Path | None = None,
                 registry: ToolRegistry | None = None,
                 human_input: HumanInputProvider | None = None,
                 kb_root: str | Path | None = None,
                 gateway: ProviderGateway | None = None,
                 listener=None):
        self.config = config
        self.session_id = session_id or uuid.uuid4().hex
        self.out_root = Path(out_root) if out_root is not None else None
        base = Path(base_dir) if base_dir is not None else None
        log_path = trace_path = None
        if self.out_root is not None:
            log_path = self.out_root / "sessions" / self.session_id / "events.ndjson"
            trace_path = self.out_root / "traces" / f"{self.session_id}.ndjson"
        self.log = ev.EventLog(path=log_path, listener=listener)
        self.gateway = gateway if gateway is not None else ProviderGateway(
            config, base_dir=base, trace_path=trace_path)
        self.registry = registry or default_registry()
        if kb_root is None:
            kb_root = (base / "kb") if base is not None else Path("kb")
        self.tool_context = ToolContext(gateway=self.gateway,
                                        kb_root=Path(kb_root))
        self.environment = Environment(config)
        self.sop = Sop(config, self.gateway, self.log)
        self.human_input = human_input
        self.agents = {
            name: Agent(name, spec, config, self.gateway, self.registry,
                        self.log, self.tool_context, human_input=human_input)
            for name, spec in config.agents.items()
        }

    def submit_human_input(self, request_id: str, text: str) -> SubmitOutcome:
        if isinstance(self.human_input, Mailbox):
            return self.human_input.submit(request_id, text)
        return SubmitOutcome.NOT_WAITING

    @property
    def waiting_request(self) -> dict | None:
        if isinstance(self.human_input, Mailbox):
            return self.human_input.outstanding
        return None

    def run(self) -> SessionResult:
        status = STATUS_FINISHED
        reason: str | None = None
        try:
            try:
                self.log.emit(ev.SESSION_STARTED,
                              config_digest=config_digest(self.config),
                              agents=list(self.config.agents),
                              initial_state=self.config.sop.initial_state,
                              max_steps=self.config.sop.max_steps,
                              dynamic_planning=self.config.sop.dynamic_planning)
                self.log.emit(ev.STATE_ENTERED,
                              state=self.config.sop.initial_state)
                while True:
                    step = self.sop.next(self.environment)
                    if step is None:
                        break
                    agent_name, state = step
                    action = self.agents[agent_name].step(state, self.environment)
                    self.environment.update(action)
                    self.log.emit(ev.ACTION_EMITTED, **action_payload(action))
                    if self.config.sop.dynamic_planning:
                        self._apply_patch(action)
                reason = self.sop.finish_reason
                self.log.emit(ev.SESSION_FINISHED, reason=reason)
            except KeyboardInterrupt:
                raise
            except Exception as exc:
                log.exception("session %s failed", self.session_id)
                status = STATUS_FAILED
                reason = str(exc)
                self.log.emit(ev.SESSION_FAILED, error=type(exc).__name__,
                              message=str(exc))
        finally:
            self._persist()
            self.log.close()
            self.gateway.close()
        return SessionResult(session_id=self.session_id, status=status,
                             reason=reason, events=self.log.events)

    def _apply_patch(self, action) -> None:
        try:
            parsed = parse_new_states(action.content)
            if parsed is None:
                return
            states, entry = parsed
            self.sop.add_states(states, entry=entry)
        except PatchError as exc:
            self.log.emit(ev.WARNING, code=ev.MALFORMED_SOP_PATCH,
                          agent=action.agent, message=str(exc))

    def _persist(self) -> None:
        if self.out_root is None:
            return
        for name, agent in self.agents.items():
            if agent.long_term is not None and agent.long_term.records:
                agent.long_term.save(
                    self.out_root / "memory" / self.session_id / f"{name}.ndjson")
        transcript = self.out_root / "transcripts" / f"{self.session_id}.md"
        transcript.parent.mkdir(parents=True, exist_ok=True)
        text = render_transcript(
            action_payload(a) for a in self.environment.history)
        transcript.write_text(text, encoding="utf-8")


def run_session(config: SystemConfig, **kwargs) -> SessionResult:
    return SessionRuntime(config, **kwargs).run()
