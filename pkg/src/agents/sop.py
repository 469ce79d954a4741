"""The standard operating procedure: a state graph walked by a controller.

``Sop.next()`` wraps two controller decisions. Transit decides whether the
session stays in the current state, moves along a declared transition, or
finishes (terminal states only). Route picks which eligible agent acts.
Both consult the LLM only when there is a real choice:

- a state just entered is never left before anyone acted (no call),
- no transitions and non-terminal means stay (no call),
- hitting ``max_turns`` forces the exit (a call only to choose *which*
  transition when several exist),
- a single eligible agent is routed directly (no call).

Replies that break the grammar get one retry, then a deterministic
fallback: stay for transit, round-robin for route, each with a Warning
event.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import events as ev
from .config import StateSpec, SystemConfig
from .environment import Environment
from .gateway import ChatRequest, ProviderGateway
from .prompts import (
    build_route_prompt,
    build_transit_prompt,
    parse_route_reply,
    parse_transit_reply,
)

log = logging.getLogger(__name__)

FINISH_TERMINAL = "terminal_state"
FINISH_MAX_STEPS = "max_steps"


class PatchError(Exception):
    """A dynamic state patch failed validation; the session continues."""


def _retry_nudge(bad_reply: str):
    from .gateway import ChatMessage

    return ChatMessage(
        role="user",
        content=f"Your reply {bad_reply[:80]!r} did not follow the required "
                f"format. Reply with exactly one of the listed options.")


@dataclass(frozen=True)
class TransitDecision:
    decision: str  # "stay" | "move" | "finish"
    target: str | None = None
    forced: bool = False
    fallback: bool = False


class Sop:
    def __init__(self, config: SystemConfig, gateway: ProviderGateway,
                 log_: ev.EventLog):
        self.config = config
        self.gateway = gateway
        self.log = log_
        self.current_state = config.sop.initial_state
        self.step_count = 0
        self.turns_in_state = 0
        self.previous_actor: str | None = None
        self.finished = False
        self.finish_reason: str | None = None

    @property
    def states(self) -> dict:
        return self.config.sop.states

    def next(self, environment: Environment):
        """One controller step: transit then route. Returns (agent, state)
        or None once the session is finished."""
        if self.finished:
            return None
        if self.step_count >= self.config.sop.max_steps:
            self._finish(FINISH_MAX_STEPS)
            return None
        decision = self._transit(environment)
        payload = {"from_state": self.current_state,
                   "decision": decision.decision,
                   "forced": decision.forced, "fallback": decision.fallback}
        if decision.decision == "move":
            payload["to_state"] = decision.target
        self.log.emit(ev.TRANSIT_DECIDED, **payload)
        if decision.decision == "finish":
            self._finish(FINISH_TERMINAL)
            return None
        if decision.decision == "move":
            self.current_state = decision.target
            self.turns_in_state = 0
            self.log.emit(ev.STATE_ENTERED, state=self.current_state)
        agent = self._route(environment)
        self.log.emit(ev.AGENT_SELECTED, agent=agent, state=self.current_state,
                      turn_index=environment.turn_index)
        self.previous_actor = agent
        self.step_count += 1
        self.turns_in_state += 1
        return agent, self.current_state

    def _finish(self, reason: str) -> None:
        self.finished = True
        self.finish_reason = reason

    # -- transit --------------------------------------------------------------

    def _transit(self, environment: Environment) -> TransitDecision:
        state = self.states[self.current_state]
        candidates = [t for t in state.transitions if t in self.states]
        if self.turns_in_state == 0:
            # Nobody has acted here yet; leaving would skip the state.
            return TransitDecision("stay")
        forced = state.max_turns is not None and self.turns_in_state >= state.max_turns
        if forced:
            if state.terminal:
                return TransitDecision("finish", forced=True)
            if len(candidates) == 1:
                return TransitDecision("move", candidates[0], forced=True)
            if not candidates:
                # Nowhere to go; max_turns is unsatisfiable here.
                return TransitDecision("stay")
            return self._ask_transit(environment, state, candidates,
                                     terminal=False, stay_allowed=False,
                                     forced=True)
        if not state.terminal and not candidates:
            return TransitDecision("stay")
        return self._ask_transit(environment, state, candidates,
                                 terminal=state.terminal, stay_allowed=True,
                                 forced=False)

    def _ask_transit(self, environment: Environment, state: StateSpec,
                     candidates: list, *, terminal: bool, stay_allowed: bool,
                     forced: bool) -> TransitDecision:
        messages = build_transit_prompt(
            self.config.sop.controller, self.current_state, candidates,
            terminal, environment.history, self.config.environment.window,
            stay_allowed=stay_allowed)
        for attempt in range(2):
            reply = self.gateway.complete(ChatRequest(messages=messages),
                                          purpose="transit").content
            parsed = parse_transit_reply(reply, candidates, terminal,
                                         stay_allowed=stay_allowed)
            if parsed is not None:
                kind, target = parsed
                return TransitDecision(kind, target, forced=forced)
            messages = messages + [_retry_nudge(reply)]
        self.log.emit(ev.WARNING, code=ev.INVALID_TRANSIT,
                      message="controller transit reply not understood twice; "
                              "falling back",
                      state=self.current_state)
        if stay_allowed:
            return TransitDecision("stay", forced=forced, fallback=True)
        return TransitDecision("move", candidates[0], forced=forced,
                               fallback=True)

    # -- route ----------------------------------------------------------------

    def _route(self, environment: Environment) -> str:
        state = self.states[self.current_state]
        eligible = [a for a in state.agents if a in self.config.agents]
        if not eligible:
            # Terminal states may omit agents; nothing to route.
            raise RuntimeError(
                f"state {self.current_state!r} has no eligible agents to route")
        if len(eligible) == 1:
            return eligible[0]
        roles = {name: self.config.agents[name].role for name in eligible}
        messages = build_route_prompt(
            self.config.sop.controller, self.current_state, eligible, roles,
            environment.history, self.config.environment.window)
        for attempt in range(2):
            reply = self.gateway.complete(ChatRequest(messages=messages),
                                          purpose="route").content
            choice = parse_route_reply(reply, eligible)
            if choice is not None:
                return choice
            messages = messages + [_retry_nudge(reply)]
        self.log.emit(ev.WARNING, code=ev.INVALID_ROUTE,
                      message="controller route reply not understood twice; "
                              "falling back to round-robin",
                      state=self.current_state)
        return self._round_robin(eligible)

    def _round_robin(self, eligible: list) -> str:
        if self.previous_actor in eligible:
            index = eligible.index(self.previous_actor)
            return eligible[(index + 1) % len(eligible)]
        return eligible[0]

    # -- dynamic states ---------------------------------------------------------

    def add_states(self, new_states: dict, entry: str | None = None) -> None:
        """Insert states into the graph mid-session.

        ``new_states`` maps fresh state names to raw state specs (the same
        shape the config uses). ``entry``, when given, must name one of the
        new states; it is appended to the current state's transitions so the
        insertion is actually reachable. The config's state table is shared
        with the environment and prompts, so the insertion is visible
        everywhere at once. Raises PatchError; the caller downgrades that to
        a Warning.
        """
        from .config import _parse_state, _Walker  # internal reuse

        if not isinstance(new_states, dict) or not new_states:
            raise PatchError("patch must carry a non-empty states object")
        parsed: dict = {}
        walker = _Walker()
        for name, raw in new_states.items():
            if name in self.states:
                raise PatchError(f"state {name!r} already exists")
            if walker.name(name, f"states.{name}") is None:
                raise PatchError(f"state name {name!r} is invalid")
            parsed[name] = _parse_state(walker, raw, f"states.{name}")
        if walker.issues:
            first = walker.issues[0]
            raise PatchError(f"{first.path}: {first.message}")
        merged = dict(self.states)
        merged.update(parsed)
        for name, spec in parsed.items():
            for i, agent in enumerate(spec.agents):
                if agent not in self.config.agents:
                    raise PatchError(
                        f"states.{name}.agents[{i}]: agent {agent!r} is not declared")
            for i, target in enumerate(spec.transitions):
                if target not in merged:
                    raise PatchError(
                        f"states.{name}.transitions[{i}]: state {target!r} "
                        f"is not declared")
        if entry is not None and entry not in parsed:
            raise PatchError(f"entry {entry!r} is not one of the new states")
        self.states.update(parsed)
        if entry is not None:
            current = self.states[self.current_state]
            if entry not in current.transitions:
                current.transitions.append(entry)
