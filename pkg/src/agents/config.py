"""Config schema: parsing, validation, and canonical serialization.

One JSON document (schema ``version: 1``) declares the agents, the SOP state
graph, the environment, and the LLM profiles. Everything the runtime
constructs comes from a ``SystemConfig`` produced here.

Parsing is strict: unknown keys are rejected, references are checked, and
defaults are filled so that a parsed config is fully explicit. Canonical
serialization (sorted keys, stable formatting) makes configs diffable and
digestable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

NAME_PATTERN = re.compile(r"^[A-Za-z0-9_-]{1,64}$")

PROMPT_PARTS = ("task", "rules", "demonstrations", "output_format", "custom")
TOOL_MODES = ("prepend", "function_call")
PROVIDERS = ("openai-compatible", "mock")

DEFAULT_API_BASE = "https://api.openai.com/v1"
DEFAULT_API_KEY_ENV = "OPENAI_API_KEY"
DEFAULT_MAX_STEPS = 100
DEFAULT_WINDOW = 10

# Error codes used in ValidationReport entries.
SYNTAX_ERROR = "SYNTAX_ERROR"
SCHEMA_ERROR = "SCHEMA_ERROR"
NAME_INVALID = "NAME_INVALID"
VERSION_UNSUPPORTED = "VERSION_UNSUPPORTED"
REFERENCE_ERROR = "REFERENCE_ERROR"
TOOL_UNKNOWN = "TOOL_UNKNOWN"
STATE_NO_AGENTS = "STATE_NO_AGENTS"
MOCK_SCRIPT_MISSING = "MOCK_SCRIPT_MISSING"
STATE_UNREACHABLE = "STATE_UNREACHABLE"

WARNING_CODES = frozenset({STATE_UNREACHABLE})


class ConfigError(Exception):
    """Base error for config parsing, carrying the offending config path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class ConfigSyntaxError(ConfigError):
    """The document is not well-formed JSON."""


class ConfigSchemaError(ConfigError):
    """A field is missing, has the wrong type, or an invalid value."""


class ConfigReferenceError(ConfigError):
    """A state/agent name points at nothing."""


@dataclass(frozen=True)
class MemoryFlags:
    long_term: bool = False
    short_term: bool = False


@dataclass(frozen=True)
class LlmProfile:
    provider: str = "mock"
    model: str = "mock"
    temperature: float = 0.0
    api_base: str = DEFAULT_API_BASE
    api_key_env: str = DEFAULT_API_KEY_ENV
    max_output_tokens: int = 1024
    # For the mock provider: a script file path, or the entries inline.
    script: str | list = field(default_factory=list)


@dataclass(frozen=True)
class AgentSpec:
    role: str
    is_human: bool = False
    memory: MemoryFlags = field(default_factory=MemoryFlags)
    llm: LlmProfile | None = None
    # Human turns skip memory writes unless explicitly enabled.
    human_memory: bool = False


@dataclass(frozen=True)
class ComponentSpec:
    kind: str  # "prompt" | "tool"
    part: str | None = None
    text: str | None = None
    name: str | None = None
    params: dict = field(default_factory=dict)
    mode: str | None = None


@dataclass(frozen=True)
class StateSpec:
    agents: list = field(default_factory=list)
    terminal: bool = False
    transitions: list = field(default_factory=list)
    max_turns: int | None = None
    # agent name or "*" -> ordered ComponentSpec list
    components: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ControllerSpec:
    transit_instruction: str = (
        "You are the session controller. Decide whether the conversation "
        "should stay in the current state, move to one of the candidate "
        "states, or finish."
    )
    route_instruction: str = (
        "You are the session controller. Pick which agent should act next, "
        "considering their roles and the recent conversation."
    )


@dataclass(frozen=True)
class SopSpec:
    initial_state: str
    states: dict  # state name -> StateSpec
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    max_steps: int = DEFAULT_MAX_STEPS
    dynamic_planning: bool = False


@dataclass(frozen=True)
class EnvSpec:
    # "public", or a map state -> list of agent names allowed to see actions
    # taken in that state (states absent from the map stay public).
    visibility: Any = "public"
    window: int = DEFAULT_WINDOW


@dataclass(frozen=True)
class SystemConfig:
    version: int
    agents: dict  # agent name -> AgentSpec
    sop: SopSpec
    llm: LlmProfile = field(default_factory=LlmProfile)
    environment: EnvSpec = field(default_factory=EnvSpec)
    description: str | None = None


@dataclass(frozen=True)
class Issue:
    path: str
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    errors: list
    warnings: list

    @staticmethod
    def from_issues(issues: list[Issue]) -> "ValidationReport":
        errors = [i for i in issues if i.code not in WARNING_CODES]
        warnings = [i for i in issues if i.code in WARNING_CODES]
        return ValidationReport(ok=not errors, errors=errors, warnings=warnings)


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


class _Walker:
    """Collects Issues while pulling typed fields out of raw JSON objects."""

    def __init__(self):
        self.issues: list[Issue] = []

    def error(self, path: str, code: str, message: str) -> None:
        self.issues.append(Issue(path=path, code=code, message=message))

    def obj(self, value: Any, path: str, allowed: set[str]) -> dict | None:
        if not isinstance(value, dict):
            self.error(path, SCHEMA_ERROR, f"expected an object, got {_kind(value)}")
            return None
        for key in value:
            if key not in allowed:
                self.error(f"{path}.{key}" if path else key, SCHEMA_ERROR, "unknown key")
        return value

    def req(self, obj: dict, key: str, path: str) -> Any:
        if key not in obj:
            self.error(_join(path, key), SCHEMA_ERROR, "required field missing")
            return None
        return obj[key]

    def str_(self, value: Any, path: str, *, nonempty: bool = False) -> str | None:
        if not isinstance(value, str):
            self.error(path, SCHEMA_ERROR, f"expected a string, got {_kind(value)}")
            return None
        if nonempty and not value.strip():
            self.error(path, SCHEMA_ERROR, "must be non-empty")
            return None
        return value

    def bool_(self, value: Any, path: str) -> bool | None:
        if not isinstance(value, bool):
            self.error(path, SCHEMA_ERROR, f"expected a boolean, got {_kind(value)}")
            return None
        return value

    def int_(self, value: Any, path: str, *, minimum: int | None = None) -> int | None:
        if isinstance(value, bool) or not isinstance(value, int):
            self.error(path, SCHEMA_ERROR, f"expected an integer, got {_kind(value)}")
            return None
        if minimum is not None and value < minimum:
            self.error(path, SCHEMA_ERROR, f"must be >= {minimum}")
            return None
        return value

    def num(self, value: Any, path: str, *, minimum: float | None = None) -> float | None:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.error(path, SCHEMA_ERROR, f"expected a number, got {_kind(value)}")
            return None
        if minimum is not None and value < minimum:
            self.error(path, SCHEMA_ERROR, f"must be >= {minimum}")
            return None
        return float(value)

    def enum(self, value: Any, path: str, options: tuple) -> str | None:
        text = self.str_(value, path)
        if text is None:
            return None
        if text not in options:
            self.error(path, SCHEMA_ERROR, f"must be one of {', '.join(options)}")
            return None
        return text

    def name(self, value: str, path: str) -> str | None:
        if not NAME_PATTERN.match(value):
            self.error(path, NAME_INVALID, "names must match [A-Za-z0-9_-]{1,64}")
            return None
        return value


def _kind(value: Any) -> str:
    if value is None:
        return "null"
    return {dict: "object", list: "array", str: "string", bool: "boolean"}.get(
        type(value), type(value).__name__
    )


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _reject_duplicate_keys(pairs: list[tuple[str, Any]]) -> dict:
    out: dict = {}
    for key, value in pairs:
        if key in out:
            raise ValueError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _parse_llm(w: _Walker, raw: Any, path: str) -> LlmProfile:
    obj = w.obj(raw, path, {"provider", "model", "temperature", "api_base",
                            "api_key_env", "max_output_tokens", "script"})
    if obj is None:
        return LlmProfile()
    provider = w.enum(obj.get("provider", "mock"), _join(path, "provider"), PROVIDERS) or "mock"
    model_default = "mock" if provider == "mock" else None
    if "model" in obj:
        model = w.str_(obj["model"], _join(path, "model"), nonempty=True)
    elif model_default is not None:
        model = model_default
    else:
        w.error(_join(path, "model"), SCHEMA_ERROR, "required field missing")
        model = None
    temperature = 0.0
    if "temperature" in obj:
        temperature = w.num(obj["temperature"], _join(path, "temperature"), minimum=0.0)
    api_base = DEFAULT_API_BASE
    if "api_base" in obj:
        api_base = w.str_(obj["api_base"], _join(path, "api_base"), nonempty=True)
    api_key_env = DEFAULT_API_KEY_ENV
    if "api_key_env" in obj:
        api_key_env = w.str_(obj["api_key_env"], _join(path, "api_key_env"), nonempty=True)
    max_tokens = 1024
    if "max_output_tokens" in obj:
        max_tokens = w.int_(obj["max_output_tokens"], _join(path, "max_output_tokens"), minimum=1)
    script: str | list = []
    if "script" in obj:
        if isinstance(obj["script"], str) or isinstance(obj["script"], list):
            script = obj["script"]
        else:
            w.error(_join(path, "script"), SCHEMA_ERROR,
                    "expected a script file path or an inline entry list")
    elif provider == "mock":
        w.error(_join(path, "script"), MOCK_SCRIPT_MISSING,
                "mock provider requires a script (path or inline list)")
    return LlmProfile(
        provider=provider,
        model=model if model is not None else "mock",
        temperature=temperature if temperature is not None else 0.0,
        api_base=api_base or DEFAULT_API_BASE,
        api_key_env=api_key_env or DEFAULT_API_KEY_ENV,
        max_output_tokens=max_tokens if max_tokens is not None else 1024,
        script=script,
    )


def _parse_agent(w: _Walker, raw: Any, path: str) -> AgentSpec:
    obj = w.obj(raw, path, {"role", "is_human", "memory", "llm", "human_memory"})
    if obj is None:
        return AgentSpec(role="")
    role = None
    if w.req(obj, "role", path) is not None:
        role = w.str_(obj["role"], _join(path, "role"), nonempty=True)
    is_human = False
    if "is_human" in obj:
        is_human = w.bool_(obj["is_human"], _join(path, "is_human")) or False
    flags = MemoryFlags()
    if "memory" in obj:
        mem = w.obj(obj["memory"], _join(path, "memory"), {"long_term", "short_term"})
        if mem is not None:
            long_term = w.bool_(mem["long_term"], _join(path, "memory.long_term")) if "long_term" in mem else False
            short_term = w.bool_(mem["short_term"], _join(path, "memory.short_term")) if "short_term" in mem else False
            flags = MemoryFlags(long_term=bool(long_term), short_term=bool(short_term))
    llm = None
    if "llm" in obj and not is_human:
        llm = _parse_llm(w, obj["llm"], _join(path, "llm"))
    human_memory = False
    if "human_memory" in obj:
        human_memory = w.bool_(obj["human_memory"], _join(path, "human_memory")) or False
    return AgentSpec(role=role or "", is_human=is_human, memory=flags, llm=llm,
                     human_memory=human_memory)


def _parse_component(w: _Walker, raw: Any, path: str) -> ComponentSpec | None:
    if not isinstance(raw, dict):
        w.error(path, SCHEMA_ERROR, f"expected an object, got {_kind(raw)}")
        return None
    kind = w.enum(raw.get("kind"), _join(path, "kind"), ("prompt", "tool"))
    if kind == "prompt":
        obj = w.obj(raw, path, {"kind", "part", "text"})
        if obj is None:
            return None
        part = w.enum(obj.get("part"), _join(path, "part"), PROMPT_PARTS)
        text = None
        if w.req(obj, "text", path) is not None:
            text = w.str_(obj["text"], _join(path, "text"), nonempty=True)
        if part is None or text is None:
            return None
        return ComponentSpec(kind="prompt", part=part, text=text)
    if kind == "tool":
        obj = w.obj(raw, path, {"kind", "name", "params", "mode"})
        if obj is None:
            return None
        name = None
        if w.req(obj, "name", path) is not None:
            name = w.str_(obj["name"], _join(path, "name"), nonempty=True)
        params: dict = {}
        if "params" in obj:
            if isinstance(obj["params"], dict):
                params = obj["params"]
            else:
                w.error(_join(path, "params"), SCHEMA_ERROR, "expected an object")
        mode = "prepend"
        if "mode" in obj:
            mode = w.enum(obj["mode"], _join(path, "mode"), TOOL_MODES) or "prepend"
        if name is None:
            return None
        return ComponentSpec(kind="tool", name=name, params=params, mode=mode)
    return None


def _parse_state(w: _Walker, raw: Any, path: str) -> StateSpec:
    obj = w.obj(raw, path, {"agents", "terminal", "transitions", "max_turns", "components"})
    if obj is None:
        return StateSpec()
    agents: list = []
    if "agents" in obj:
        if isinstance(obj["agents"], list):
            for i, item in enumerate(obj["agents"]):
                name = w.str_(item, f"{path}.agents[{i}]", nonempty=True)
                if name is not None:
                    agents.append(name)
        else:
            w.error(_join(path, "agents"), SCHEMA_ERROR, "expected an array")
    terminal = False
    if "terminal" in obj:
        terminal = w.bool_(obj["terminal"], _join(path, "terminal")) or False
    if not agents and not terminal:
        w.error(_join(path, "agents"), STATE_NO_AGENTS,
                "non-terminal states need at least one eligible agent")
    transitions: list = []
    if "transitions" in obj:
        if isinstance(obj["transitions"], list):
            for i, item in enumerate(obj["transitions"]):
                name = w.str_(item, f"{path}.transitions[{i}]", nonempty=True)
                if name is not None:
                    transitions.append(name)
        else:
            w.error(_join(path, "transitions"), SCHEMA_ERROR, "expected an array")
    max_turns = None
    if "max_turns" in obj and obj["max_turns"] is not None:
        max_turns = w.int_(obj["max_turns"], _join(path, "max_turns"), minimum=1)
    components: dict = {}
    if "components" in obj:
        if isinstance(obj["components"], dict):
            for key, value in obj["components"].items():
                comp_path = f"{path}.components.{key}"
                if not isinstance(value, list):
                    w.error(comp_path, SCHEMA_ERROR, "expected an array of components")
                    continue
                parsed = []
                for i, item in enumerate(value):
                    comp = _parse_component(w, item, f"{comp_path}[{i}]")
                    if comp is not None:
                        parsed.append(comp)
                components[key] = parsed
        else:
            w.error(_join(path, "components"), SCHEMA_ERROR, "expected an object")
    return StateSpec(agents=agents, terminal=terminal, transitions=transitions,
                     max_turns=max_turns, components=components)


def _parse_sop(w: _Walker, raw: Any, path: str) -> SopSpec | None:
    obj = w.obj(raw, path, {"initial_state", "controller", "states", "max_steps",
                            "dynamic_planning"})
    if obj is None:
        return None
    initial = None
    if w.req(obj, "initial_state", path) is not None:
        initial = w.str_(obj["initial_state"], _join(path, "initial_state"), nonempty=True)
    controller = ControllerSpec()
    if "controller" in obj:
        ctl = w.obj(obj["controller"], _join(path, "controller"),
                    {"transit_instruction", "route_instruction"})
        if ctl is not None:
            transit = ctl.get("transit_instruction")
            route = ctl.get("route_instruction")
            kwargs = {}
            if transit is not None:
                text = w.str_(transit, _join(path, "controller.transit_instruction"), nonempty=True)
                if text:
                    kwargs["transit_instruction"] = text
            if route is not None:
                text = w.str_(route, _join(path, "controller.route_instruction"), nonempty=True)
                if text:
                    kwargs["route_instruction"] = text
            controller = ControllerSpec(**kwargs)
    states: dict = {}
    if w.req(obj, "states", path) is not None:
        raw_states = obj["states"]
        if not isinstance(raw_states, dict):
            w.error(_join(path, "states"), SCHEMA_ERROR, "expected an object")
        elif not raw_states:
            w.error(_join(path, "states"), SCHEMA_ERROR, "at least one state required")
        else:
            for name, value in raw_states.items():
                state_path = f"{path}.states.{name}"
                if w.name(name, state_path) is None:
                    continue
                states[name] = _parse_state(w, value, state_path)
    max_steps = DEFAULT_MAX_STEPS
    if "max_steps" in obj:
        max_steps = w.int_(obj["max_steps"], _join(path, "max_steps"), minimum=1) or DEFAULT_MAX_STEPS
    dynamic = False
    if "dynamic_planning" in obj:
        dynamic = w.bool_(obj["dynamic_planning"], _join(path, "dynamic_planning")) or False
    if initial is None:
        return None
    return SopSpec(initial_state=initial, controller=controller, states=states,
                   max_steps=max_steps, dynamic_planning=dynamic)


def _parse_environment(w: _Walker, raw: Any, path: str) -> EnvSpec:
    obj = w.obj(raw, path, {"visibility", "window"})
    if obj is None:
        return EnvSpec()
    visibility: Any = "public"
    if "visibility" in obj:
        vis = obj["visibility"]
        if vis == "public":
            visibility = "public"
        elif isinstance(vis, dict):
            cleaned: dict = {}
            for state, agents in vis.items():
                vis_path = f"{path}.visibility.{state}"
                if not isinstance(agents, list):
                    w.error(vis_path, SCHEMA_ERROR, "expected an array of agent names")
                    continue
                names = []
                for i, item in enumerate(agents):
                    name = w.str_(item, f"{vis_path}[{i}]", nonempty=True)
                    if name is not None:
                        names.append(name)
                cleaned[state] = names
            visibility = cleaned
        else:
            w.error(_join(path, "visibility"), SCHEMA_ERROR,
                    'expected "public" or a state -> agents map')
    window = DEFAULT_WINDOW
    if "window" in obj:
        window = w.int_(obj["window"], _join(path, "window"), minimum=1) or DEFAULT_WINDOW
    return EnvSpec(visibility=visibility, window=window)


def _build(raw: Any) -> tuple[SystemConfig | None, list[Issue]]:
    w = _Walker()
    obj = w.obj(raw, "", {"version", "description", "llm", "agents", "sop", "environment"})
    if obj is None:
        return None, w.issues
    version = None
    if w.req(obj, "version", "") is not None:
        version = w.int_(obj["version"], "version")
        if version is not None and version != 1:
            w.error("version", VERSION_UNSUPPORTED, f"unsupported schema version {version}")
    description = None
    if "description" in obj:
        description = w.str_(obj["description"], "description", nonempty=True)
    llm = LlmProfile()
    if "llm" in obj:
        llm = _parse_llm(w, obj["llm"], "llm")
    agents: dict = {}
    if w.req(obj, "agents", "") is not None:
        raw_agents = obj["agents"]
        if not isinstance(raw_agents, dict):
            w.error("agents", SCHEMA_ERROR, "expected an object")
        elif not raw_agents:
            w.error("agents", SCHEMA_ERROR, "at least one agent required")
        else:
            for name, value in raw_agents.items():
                agent_path = f"agents.{name}"
                if w.name(name, agent_path) is None:
                    continue
                agents[name] = _parse_agent(w, value, agent_path)
    sop = None
    if w.req(obj, "sop", "") is not None:
        sop = _parse_sop(w, obj["sop"], "sop")
    environment = EnvSpec()
    if "environment" in obj:
        environment = _parse_environment(w, obj["environment"], "environment")
    if w.issues or version is None or sop is None:
        return None, w.issues
    return SystemConfig(version=version, description=description, llm=llm,
                        agents=agents, sop=sop, environment=environment), w.issues


# ---------------------------------------------------------------------------
# Reference / graph checks
# ---------------------------------------------------------------------------


def check_references(config: SystemConfig) -> list[Issue]:
    """Dangling state and agent names, all of them."""
    issues: list[Issue] = []
    states = config.sop.states
    if config.sop.initial_state not in states:
        issues.append(Issue("sop.initial_state", REFERENCE_ERROR,
                            f"initial state {config.sop.initial_state!r} is not declared"))
    for state_name, state in states.items():
        base = f"sop.states.{state_name}"
        for i, agent in enumerate(state.agents):
            if agent not in config.agents:
                issues.append(Issue(f"{base}.agents[{i}]", REFERENCE_ERROR,
                                    f"agent {agent!r} is not declared"))
        for i, target in enumerate(state.transitions):
            if target not in states:
                issues.append(Issue(f"{base}.transitions[{i}]", REFERENCE_ERROR,
                                    f"state {target!r} is not declared"))
        for key in state.components:
            if key != "*" and key not in config.agents:
                issues.append(Issue(f"{base}.components.{key}", REFERENCE_ERROR,
                                    f"agent {key!r} is not declared"))
    if isinstance(config.environment.visibility, dict):
        for state_name, agents in config.environment.visibility.items():
            base = f"environment.visibility.{state_name}"
            if state_name not in states:
                issues.append(Issue(base, REFERENCE_ERROR,
                                    f"state {state_name!r} is not declared"))
            for i, agent in enumerate(agents):
                if agent not in config.agents:
                    issues.append(Issue(f"{base}[{i}]", REFERENCE_ERROR,
                                        f"agent {agent!r} is not declared"))
    return issues


def check_tools(config: SystemConfig, tools) -> list[Issue]:
    """Tool components must name tools known to the registry."""
    issues: list[Issue] = []
    if tools is None:
        return issues
    for state_name, state in config.sop.states.items():
        for key, comps in state.components.items():
            for i, comp in enumerate(comps):
                if comp.kind == "tool" and comp.name not in tools:
                    issues.append(Issue(
                        f"sop.states.{state_name}.components.{key}[{i}].name",
                        TOOL_UNKNOWN, f"tool {comp.name!r} is not registered"))
    return issues


def check_reachability(config: SystemConfig) -> list[Issue]:
    """States unreachable from the initial state (warning: add_states may
    wire them up later)."""
    states = config.sop.states
    if config.sop.initial_state not in states:
        return []
    seen = {config.sop.initial_state}
    frontier = [config.sop.initial_state]
    while frontier:
        current = frontier.pop()
        for target in states[current].transitions:
            if target in states and target not in seen:
                seen.add(target)
                frontier.append(target)
    return [Issue(f"sop.states.{name}", STATE_UNREACHABLE,
                  "state is unreachable from the initial state")
            for name in states if name not in seen]


def _check_semantics(config: SystemConfig) -> list[Issue]:
    """Structural invariants, re-checked on the object for configs built in
    code (e.g. by add_states or the generation pipeline)."""
    issues: list[Issue] = []
    if config.version != 1:
        issues.append(Issue("version", VERSION_UNSUPPORTED,
                            f"unsupported schema version {config.version}"))
    if not config.agents:
        issues.append(Issue("agents", SCHEMA_ERROR, "at least one agent required"))
    for name in config.agents:
        if not NAME_PATTERN.match(name):
            issues.append(Issue(f"agents.{name}", NAME_INVALID,
                                "names must match [A-Za-z0-9_-]{1,64}"))
    if not config.sop.states:
        issues.append(Issue("sop.states", SCHEMA_ERROR, "at least one state required"))
    for name, state in config.sop.states.items():
        if not state.agents and not state.terminal:
            issues.append(Issue(f"sop.states.{name}.agents", STATE_NO_AGENTS,
                                "non-terminal states need at least one eligible agent"))
    for profile, path in _profiles(config):
        if profile.provider == "mock" and profile.script is None:
            issues.append(Issue(f"{path}.script", MOCK_SCRIPT_MISSING,
                                "mock provider requires a script"))
        if profile.temperature < 0:
            issues.append(Issue(f"{path}.temperature", SCHEMA_ERROR, "must be >= 0"))
    return issues


def _profiles(config: SystemConfig):
    yield config.llm, "llm"
    for name, agent in config.agents.items():
        if agent.llm is not None:
            yield agent.llm, f"agents.{name}.llm"


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def parse_config(source: bytes | str) -> SystemConfig:
    """Parse and fully check a config document.

    Raises ConfigSyntaxError for malformed JSON, ConfigSchemaError for
    missing/odd-typed fields, ConfigReferenceError for dangling names. The
    returned config has every default filled in.
    """
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigSyntaxError("", f"not valid UTF-8: {exc}") from exc
    try:
        raw = json.loads(source, object_pairs_hook=_reject_duplicate_keys)
    except ValueError as exc:
        raise ConfigSyntaxError("", str(exc)) from exc
    config, issues = _build(raw)
    if issues:
        first = issues[0]
        raise ConfigSchemaError(first.path, first.message)
    assert config is not None
    refs = check_references(config)
    if refs:
        raise ConfigReferenceError(refs[0].path, refs[0].message)
    return config


def load_config(path: str | Path) -> SystemConfig:
    return parse_config(Path(path).read_bytes())


def validate(config: SystemConfig, tools=None) -> ValidationReport:
    """Full report over an already-built config: every violation, not just
    the first. ``tools`` is any container answering ``name in tools``."""
    issues = _check_semantics(config)
    issues += check_references(config)
    issues += check_tools(config, tools)
    issues += check_reachability(config)
    return ValidationReport.from_issues(issues)


def validate_document(source: bytes | str | dict, tools=None) -> ValidationReport:
    """Parse-and-validate for raw documents (service and CLI surface).

    Unlike parse_config this never raises: syntax, schema, and reference
    problems all land in the report.
    """
    raw: Any
    if isinstance(source, dict):
        raw = source
    else:
        if isinstance(source, bytes):
            try:
                source = source.decode("utf-8")
            except UnicodeDecodeError as exc:
                return ValidationReport(False, [Issue("", SYNTAX_ERROR, str(exc))], [])
        try:
            raw = json.loads(source, object_pairs_hook=_reject_duplicate_keys)
        except ValueError as exc:
            return ValidationReport(False, [Issue("", SYNTAX_ERROR, str(exc))], [])
    config, issues = _build(raw)
    if config is None:
        return ValidationReport.from_issues(issues)
    return ValidationReport.from_issues(issues + check_references(config)
                                        + check_tools(config, tools)
                                        + check_reachability(config))


def config_to_dict(config: SystemConfig) -> dict:
    """Plain-JSON form with all defaults materialized."""
    out: dict = {
        "version": config.version,
        "llm": _llm_to_dict(config.llm),
        "agents": {name: _agent_to_dict(spec) for name, spec in config.agents.items()},
        "sop": {
            "initial_state": config.sop.initial_state,
            "controller": {
                "transit_instruction": config.sop.controller.transit_instruction,
                "route_instruction": config.sop.controller.route_instruction,
            },
            "states": {name: _state_to_dict(spec)
                       for name, spec in config.sop.states.items()},
            "max_steps": config.sop.max_steps,
            "dynamic_planning": config.sop.dynamic_planning,
        },
        "environment": {
            "visibility": config.environment.visibility,
            "window": config.environment.window,
        },
    }
    if config.description is not None:
        out["description"] = config.description
    return out


def _llm_to_dict(profile: LlmProfile) -> dict:
    return {
        "provider": profile.provider,
        "model": profile.model,
        "temperature": profile.temperature,
        "api_base": profile.api_base,
        "api_key_env": profile.api_key_env,
        "max_output_tokens": profile.max_output_tokens,
        "script": profile.script,
    }


def _agent_to_dict(spec: AgentSpec) -> dict:
    out: dict = {
        "role": spec.role,
        "is_human": spec.is_human,
        "memory": {"long_term": spec.memory.long_term,
                   "short_term": spec.memory.short_term},
        "human_memory": spec.human_memory,
    }
    if spec.llm is not None:
        out["llm"] = _llm_to_dict(spec.llm)
    return out


def _component_to_dict(comp: ComponentSpec) -> dict:
    if comp.kind == "prompt":
        return {"kind": "prompt", "part": comp.part, "text": comp.text}
    return {"kind": "tool", "name": comp.name, "params": comp.params, "mode": comp.mode}


def _state_to_dict(spec: StateSpec) -> dict:
    out: dict = {
        "agents": list(spec.agents),
        "terminal": spec.terminal,
        "transitions": list(spec.transitions),
        "components": {key: [_component_to_dict(c) for c in comps]
                       for key, comps in spec.components.items()},
    }
    if spec.max_turns is not None:
        out["max_turns"] = spec.max_turns
    return out


def parse_llm_profile(raw: dict) -> LlmProfile:
    """Parse a standalone LLM profile document (service and CLI surface)."""
    w = _Walker()
    profile = _parse_llm(w, raw, "llm")
    if w.issues:
        first = w.issues[0]
        raise ConfigSchemaError(first.path, first.message)
    return profile


def components_for(state: StateSpec, agent: str) -> list:
    """The component list an agent sees in a state: the agent-specific entry
    if present, otherwise the "*" entry, otherwise nothing."""
    if agent in state.components:
        return state.components[agent]
    return state.components.get("*", [])


def canonicalize(config: SystemConfig) -> bytes:
    """Deterministic serialization: sorted keys, two-space indent, UTF-8,
    trailing newline. parse(canonicalize(c)) == c."""
    text = json.dumps(config_to_dict(config), sort_keys=True, indent=2,
                      ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def config_digest(config: SystemConfig) -> str:
    import hashlib

    return hashlib.sha256(canonicalize(config)).hexdigest()
