"""Shared environment: the action history and per-agent views of it.

The environment is the single place actions land. Each agent sees a
filtered, windowed slice of the history: actions taken in a state with a
visibility whitelist are hidden from agents not on it, and only the most
recent ``window`` visible actions are observed. The observation also carries
the text used to query long-term memory (recent visible content, or the
state's task text on the very first look).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import SystemConfig, components_for

MEMORY_QUERY_ACTIONS = 3


@dataclass(frozen=True)
class ToolCall:
    tool_name: str
    params: dict
    result_digest: str


@dataclass(frozen=True)
class Action:
    agent: str
    state: str
    turn_index: int
    content: str
    tool_calls: list = field(default_factory=list)
    is_human_supplied: bool = False


@dataclass(frozen=True)
class Observation:
    agent: str
    state: str
    turn_index: int
    visible_actions: list
    memory_query: str


class Environment:
    def __init__(self, config: SystemConfig):
        self.config = config
        self.history: list[Action] = []

    @property
    def turn_index(self) -> int:
        return len(self.history)

    def visible_to(self, agent: str, state: str) -> bool:
        visibility = self.config.environment.visibility
        if visibility == "public":
            return True
        whitelist = visibility.get(state)
        if whitelist is None:
            return True
        return agent in whitelist

    def visible_history(self, agent: str) -> list[Action]:
        return [a for a in self.history if self.visible_to(agent, a.state)]

    def observed(self, agent: str, state: str) -> Observation:
        visible = self.visible_history(agent)
        window = visible[-self.config.environment.window:]
        return Observation(
            agent=agent,
            state=state,
            turn_index=self.turn_index,
            visible_actions=window,
            memory_query=self._memory_query(agent, state, visible),
        )

    def _memory_query(self, agent: str, state: str, visible: list[Action]) -> str:
        recent = visible[-MEMORY_QUERY_ACTIONS:]
        if recent:
            return "\n".join(a.content for a in recent)
        state_spec = self.config.sop.states.get(state)
        if state_spec is not None:
            tasks = [c.text for c in components_for(state_spec, agent)
                     if c.kind == "prompt" and c.part == "task"]
            if tasks:
                return "\n".join(tasks)
        return state

    def update(self, action: Action) -> None:
        if action.turn_index != len(self.history):
            raise ValueError(
                f"action turn_index {action.turn_index} breaks dense ordering "
                f"(expected {len(self.history)})")
        self.history.append(action)
