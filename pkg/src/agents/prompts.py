"""Prompt assembly and the controller reply grammar.

Prompt components render in a fixed part order (task, rules, demonstrations,
output_format, custom) no matter how the config lists them, so prompts are
stable under config reordering.

Controller replies use a tiny grammar:

- transit: ``CONTINUE`` to stay, ``<next_state>NAME</next_state>`` to move,
  ``FINISH`` (terminal states only) to end the session.
- route: ``<next_agent>NAME</next_agent>``, or the bare agent name.

Parsers return None for anything else; callers retry once and then fall
back.
"""

from __future__ import annotations

import re

from .config import ControllerSpec, StateSpec, SystemConfig, components_for
from .environment import Action, Observation
from .gateway import ChatMessage
from .memory import Scratchpad, format_sim

PART_ORDER = ("task", "rules", "demonstrations", "output_format", "custom")
PART_HEADINGS = {
    "task": "Task",
    "rules": "Rules",
    "demonstrations": "Demonstrations",
    "output_format": "Output format",
    "custom": "Notes",
}

_NEXT_STATE = re.compile(r"<next_state>\s*(.*?)\s*</next_state>", re.DOTALL)
_NEXT_AGENT = re.compile(r"<next_agent>\s*(.*?)\s*</next_agent>", re.DOTALL)
_FINISH = re.compile(r"\bFINISH\b")
_CONTINUE = re.compile(r"\bCONTINUE\b")


def _speaker_line(action: Action) -> str:
    prefix = f"{action.agent} @ {action.state}"
    if action.is_human_supplied:
        prefix += " (human)"
    return f"{prefix}: {action.content}"


def render_observation(observation: Observation) -> str:
    """Plain-text view of what an agent sees; also shown verbatim to humans
    when their input is requested."""
    lines = [f"state: {observation.state}", f"turn: {observation.turn_index}"]
    if observation.visible_actions:
        lines.append("recent actions:")
        lines += [f"  {_speaker_line(a)}" for a in observation.visible_actions]
    else:
        lines.append("recent actions: (none yet)")
    return "\n".join(lines)


def assemble_prompt(config: SystemConfig, state: StateSpec, state_name: str,
                    agent: str, observation: Observation,
                    memories: list | None = None,
                    scratchpad: Scratchpad | None = None,
                    tool_results: list | None = None) -> list[ChatMessage]:
    """Build the chat messages for one agent turn.

    System message: role, then prompt components in canonical part order,
    then retrieved memories, scratchpad, and prepend-tool results. History
    follows as chat turns (own actions as assistant), ending with a user
    nudge to act.
    """
    spec = config.agents[agent]
    sections = [f"You are {agent}. Role: {spec.role}",
                f"Current state: {state_name}"]
    comps = [c for c in components_for(state, agent) if c.kind == "prompt"]
    for part in PART_ORDER:
        texts = [c.text for c in comps if c.part == part]
        if texts:
            sections.append(f"## {PART_HEADINGS[part]}\n" + "\n\n".join(texts))
    if memories:
        lines = [f"- ({format_sim(m.similarity)}) {m.record.text}"
                 for m in memories]
        sections.append("## Relevant memories\n" + "\n".join(lines))
    if scratchpad is not None and scratchpad.content:
        sections.append("## Scratchpad\n" + scratchpad.content)
    if tool_results:
        lines = []
        for result in tool_results:
            status = "ok" if result.ok else f"error: {result.error}"
            lines.append(f"### {result.tool_name} ({status})\n{result.content}")
        sections.append("## Tool results\n" + "\n".join(lines))
    messages = [ChatMessage(role="system", content="\n\n".join(sections))]
    for action in observation.visible_actions:
        role = "assistant" if action.agent == agent else "user"
        messages.append(ChatMessage(role=role, content=_speaker_line(action),
                                    name=action.agent))
    messages.append(ChatMessage(
        role="user",
        content=f"It is your turn to act as {agent}. Reply with your "
                f"contribution only."))
    return messages


def _transcript(history: list[Action], window: int) -> str:
    recent = history[-window:]
    if not recent:
        return "(no actions yet)"
    return "\n".join(f"turn {a.turn_index} - {_speaker_line(a)}" for a in recent)


def build_transit_prompt(controller: ControllerSpec, state_name: str,
                         candidates: list, terminal: bool,
                         history: list[Action], window: int,
                         stay_allowed: bool = True) -> list[ChatMessage]:
    options = []
    if stay_allowed:
        options.append("reply exactly CONTINUE to stay in the current state")
    for name in candidates:
        options.append(f"reply <next_state>{name}</next_state> to move to {name}")
    if terminal:
        options.append("reply exactly FINISH to end the session")
    system = (f"{controller.transit_instruction}\n\n"
              f"Current state: {state_name}\n"
              f"Options:\n" + "\n".join(f"- {o}" for o in options))
    user = (f"Conversation so far:\n{_transcript(history, window)}\n\n"
            f"Decide the next_state now. Reply with exactly one option.")
    return [ChatMessage(role="system", content=system),
            ChatMessage(role="user", content=user)]


def build_route_prompt(controller: ControllerSpec, state_name: str,
                       eligible: list, roles: dict,
                       history: list[Action], window: int) -> list[ChatMessage]:
    agents = "\n".join(f"- {name}: {roles[name]}" for name in eligible)
    system = (f"{controller.route_instruction}\n\n"
              f"Current state: {state_name}\n"
              f"Eligible agents:\n{agents}")
    user = (f"Conversation so far:\n{_transcript(history, window)}\n\n"
            f"Pick the next_agent. Reply <next_agent>NAME</next_agent>.")
    return [ChatMessage(role="system", content=system),
            ChatMessage(role="user", content=user)]


def parse_transit_reply(text: str, candidates: list, terminal: bool,
                        stay_allowed: bool = True):
    """Returns ("stay", None), ("move", target), ("finish", None), or None
    when the reply does not follow the grammar."""
    match = _NEXT_STATE.search(text)
    if match:
        target = match.group(1)
        return ("move", target) if target in candidates else None
    if terminal and _FINISH.search(text):
        return ("finish", None)
    if stay_allowed and _CONTINUE.search(text):
        return ("stay", None)
    return None


def parse_route_reply(text: str, eligible: list):
    match = _NEXT_AGENT.search(text)
    if match:
        name = match.group(1)
        return name if name in eligible else None
    stripped = text.strip()
    return stripped if stripped in eligible else None
