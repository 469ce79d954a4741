"""Agents: observe, act, update memory.

``Agent.step()`` wraps the three phases of a turn. Observation filters the
shared history and retrieves long-term memories for the prompt. Acting
either asks the LLM (dispatching up to three function-call tool rounds,
then forcing a plain reply) or, for human agents, requests input through
the provider hook; human turns never touch the LLM or tools. Memory
updates append the action to the long-term store and rewrite the
scratchpad; their failures degrade to Warning events rather than aborting
the session.
"""

from __future__ import annotations

import logging

from . import events as ev
from .config import AgentSpec, SystemConfig, components_for
from .environment import Action, Environment, Observation, ToolCall
from .gateway import ChatMessage, ChatRequest, ProviderGateway
from .memory import DEFAULT_K, LongTermMemory, Scratchpad
from .prompts import assemble_prompt, render_observation
from .tools import ToolContext, ToolRegistry

log = logging.getLogger(__name__)

MAX_TOOL_ROUNDS = 3


class HumanInputProvider:
    """Two-phase handoff: ``open`` announces the request and returns its id,
    ``wait`` blocks until the input arrives."""

    def open(self, agent: str, state: str, summary: str) -> str:
        raise NotImplementedError

    def wait(self, request_id: str) -> str:
        raise NotImplementedError


class Agent:
    def __init__(self, name: str, spec: AgentSpec, config: SystemConfig,
                 gateway: ProviderGateway, registry: ToolRegistry,
                 log_: ev.EventLog, tool_context: ToolContext,
                 human_input: HumanInputProvider | None = None):
        self.name = name
        self.spec = spec
        self.config = config
        self.gateway = gateway
        self.registry = registry
        self.log = log_
        self.tool_context = tool_context
        self.human_input = human_input
        self.long_term = LongTermMemory() if spec.memory.long_term else None
        self.scratchpad = Scratchpad() if spec.memory.short_term else None

    @property
    def is_human(self) -> bool:
        return self.spec.is_human

    @property
    def profile(self):
        return self.spec.llm or self.config.llm

    def step(self, state_name: str, environment: Environment) -> Action:
        observation, memories = self.observe(state_name, environment)
        action = self.act(state_name, observation, memories)
        self.update_memory(action)
        return action

    # -- observe ---------------------------------------------------------------

    def observe(self, state_name: str, environment: Environment):
        observation = environment.observed(self.name, state_name)
        memories: list = []
        if self.long_term is not None and self.long_term.records:
            query = self.gateway.embed([observation.memory_query])[0]
            memories = self.long_term.query(query, k=DEFAULT_K)
        return observation, memories

    # -- act ---------------------------------------------------------------------

    def act(self, state_name: str, observation: Observation,
            memories: list) -> Action:
        if self.is_human:
            return self._act_human(state_name, observation)
        state = self.config.sop.states[state_name]
        components = components_for(state, self.name)
        tool_results = []
        tool_calls: list = []
        for comp in components:
            if comp.kind == "tool" and comp.mode == "prepend":
                result = self._invoke_tool(comp.name, dict(comp.params),
                                           state_name)
                tool_results.append(result)
                tool_calls.append(ToolCall(tool_name=comp.name,
                                           params=dict(comp.params),
                                           result_digest=result.digest))
        function_tools = {comp.name: comp for comp in components
                          if comp.kind == "tool" and comp.mode == "function_call"}
        messages = assemble_prompt(
            self.config, state, state_name, self.name, observation,
            memories=memories, scratchpad=self.scratchpad,
            tool_results=tool_results)
        functions = self.registry.function_specs(sorted(function_tools))
        dispatches = 0
        while True:
            include = functions if dispatches < MAX_TOOL_ROUNDS else []
            if functions and dispatches >= MAX_TOOL_ROUNDS:
                messages = messages + [ChatMessage(
                    role="user",
                    content="Tool budget exhausted. Reply with your final "
                            "contribution only.")]
            response = self.gateway.complete(
                ChatRequest(messages=messages, functions=include),
                profile=self.profile, purpose="act", agent=self.name)
            call = response.function_call
            if call is None or dispatches >= MAX_TOOL_ROUNDS:
                content = response.content.strip()
                break
            comp = function_tools.get(call.name)
            params = dict(call.arguments)
            if comp is not None:
                params.update(comp.params)  # configured params pin arguments
            result = self._invoke_tool(call.name, params, state_name)
            tool_calls.append(ToolCall(tool_name=call.name, params=params,
                                       result_digest=result.digest))
            dispatches += 1
            messages = messages + [
                ChatMessage(role="assistant",
                            content=f"[calls tool {call.name}]"),
                ChatMessage(role="function", name=call.name,
                            content=result.content if result.ok
                            else f"error: {result.error}"),
            ]
        return Action(agent=self.name, state=state_name,
                      turn_index=observation.turn_index, content=content,
                      tool_calls=tool_calls)

    def _invoke_tool(self, name: str, params: dict, state_name: str):
        result = self.registry.invoke(name, params, self.tool_context)
        self.log.emit(ev.TOOL_INVOKED, agent=self.name, state=state_name,
                      tool=name, params=params, ok=result.ok,
                      result_digest=result.digest)
        return result

    def _act_human(self, state_name: str, observation: Observation) -> Action:
        if self.human_input is None:
            raise RuntimeError(
                f"agent {self.name!r} is human but no input provider is wired")
        summary = render_observation(observation)
        request_id = self.human_input.open(self.name, state_name, summary)
        self.log.emit(ev.HUMAN_INPUT_REQUESTED, request_id=request_id,
                      agent=self.name, state=state_name, summary=summary)
        text = self.human_input.wait(request_id)
        self.log.emit(ev.HUMAN_INPUT_RECEIVED, request_id=request_id,
                      agent=self.name, state=state_name)
        return Action(agent=self.name, state=state_name,
                      turn_index=observation.turn_index, content=text.strip(),
                      is_human_supplied=True)

    # -- memory ---------------------------------------------------------------

    def update_memory(self, action: Action) -> None:
        if action.is_human_supplied and not self.spec.human_memory:
            return
        if self.long_term is not None:
            try:
                vector = self.gateway.embed([action.content])[0]
                record_id = self.long_term.add(
                    action.content, vector,
                    metadata={"turn": action.turn_index, "state": action.state})
                self.log.emit(ev.MEMORY_UPDATED, agent=self.name,
                              kind="long_term", record_id=record_id,
                              state=action.state, turn_index=action.turn_index)
            except Exception as exc:
                log.warning("long-term memory update failed for %s: %s",
                            self.name, exc)
                self.log.emit(ev.WARNING, code=ev.MEMORY_FAILED,
                              agent=self.name, kind="long_term",
                              message=f"{type(exc).__name__}: {exc}")
        if self.scratchpad is not None:
            try:
                self._update_scratchpad(action)
            except Exception as exc:
                log.warning("scratchpad update failed for %s: %s",
                            self.name, exc)
                self.log.emit(ev.WARNING, code=ev.MEMORY_FAILED,
                              agent=self.name, kind="scratchpad",
                              message=f"{type(exc).__name__}: {exc}")

    def _update_scratchpad(self, action: Action) -> None:
        messages = [
            ChatMessage(role="system", content=(
                f"You maintain the private scratchpad of {self.name}. Rewrite "
                f"it to stay useful for future turns: keep standing goals, "
                f"facts, and open questions; drop stale detail. Reply with "
                f"the new scratchpad text only.")),
            ChatMessage(role="user", content=(
                f"Current scratchpad:\n{self.scratchpad.content or '(empty)'}\n\n"
                f"Latest action by {self.name} in state {action.state}:\n"
                f"{action.content}\n\nRewrite the scratchpad now.")),
        ]
        response = self.gateway.complete(
            ChatRequest(messages=messages), profile=self.profile,
            purpose="memory", agent=self.name)
        self.scratchpad.update(response.content)
        self.log.emit(ev.MEMORY_UPDATED, agent=self.name, kind="scratchpad",
                      last_updated_turn=self.scratchpad.last_updated_turn,
                      chars=len(self.scratchpad.content))
