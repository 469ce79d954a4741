"""Workflow generation: turn a task description into a runnable config.

The generator is itself a session: a bundled three-state config walks one
architect agent through roster design, state-graph design, and component
writing (one turn each, so the happy path costs exactly three completions
and zero controller calls). Stage outputs are fenced JSON blocks that get
assembled into a config document, validated, and repaired with up to two
follow-up completions when validation fails.

Exemplar configs ground the first stage: the library embeds their
descriptions and retrieves the closest ones to the task as demonstrations.
"""

from __future__ import annotations

import copy
import json
import logging
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import config as cfg
from .gateway import ChatMessage, ChatRequest, LlmProfile, ProviderGateway
from .runtime import SessionRuntime
from .tools import default_registry

log = logging.getLogger(__name__)

EXEMPLAR_TOP_K = 2
MAX_VALIDATION_ATTEMPTS = 3

_JSON_BLOCK = re.compile(r"```json\s*\n(.*?)```", re.DOTALL)

TASK_PLACEHOLDER = "{{TASK}}"
EXEMPLARS_PLACEHOLDER = "{{EXEMPLARS}}"


@dataclass(frozen=True)
class Exemplar:
    name: str
    description: str
    document: dict


class ExemplarLibrary:
    """Embedded exemplar configs, retrievable by task similarity."""

    def __init__(self, exemplars: list, matrix: np.ndarray):
        self.exemplars = exemplars
        self._matrix = matrix

    def __len__(self) -> int:
        return len(self.exemplars)

    def top(self, query: str, gateway: ProviderGateway,
            k: int = EXEMPLAR_TOP_K) -> list:
        if not self.exemplars or k <= 0:
            return []
        qvec = gateway.embed([query])[0]
        sims = self._matrix @ qvec
        order = sorted(range(len(self.exemplars)),
                       key=lambda i: (-float(sims[i]), i))
        return [self.exemplars[i] for i in order[:k]]


def build_library(exemplar_dir: str | Path,
                  gateway: ProviderGateway) -> ExemplarLibrary:
    """Load every ``*.json`` config under the directory (sorted by name),
    embedding descriptions for retrieval. Invalid configs are skipped with a
    log line rather than failing the build."""
    exemplars: list = []
    for path in sorted(Path(exemplar_dir).glob("*.json")):
        try:
            config = cfg.load_config(path)
        except cfg.ConfigError as exc:
            log.warning("skipping exemplar %s: %s", path.name, exc)
            continue
        exemplars.append(Exemplar(
            name=path.stem,
            description=config.description or path.stem,
            document=cfg.config_to_dict(config)))
    if exemplars:
        matrix = gateway.embed([e.description for e in exemplars])
    else:
        matrix = np.zeros((0, 0))
    return ExemplarLibrary(exemplars, matrix)


@dataclass
class GenerationResult:
    document: dict
    report: cfg.ValidationReport
    config: cfg.SystemConfig | None
    attempts: int
    stage_outputs: list
    exemplars_used: list
    session_events: list

    @property
    def ok(self) -> bool:
        return self.config is not None


def _substitute(node, mapping: dict):
    if isinstance(node, str):
        for key, value in mapping.items():
            node = node.replace(key, value)
        return node
    if isinstance(node, list):
        return [_substitute(item, mapping) for item in node]
    if isinstance(node, dict):
        return {key: _substitute(value, mapping) for key, value in node.items()}
    return node


def _meta_document() -> dict:
    text = resources.files("agents").joinpath("data/meta.json").read_text("utf-8")
    return json.loads(text)


def _render_exemplars(exemplars: list) -> str:
    if not exemplars:
        return "(no reference workflows available)"
    parts = []
    for ex in exemplars:
        parts.append(f"### {ex.name}\n{ex.description}\n```json\n"
                     f"{json.dumps(ex.document, indent=2, sort_keys=True)}\n```")
    return "\n\n".join(parts)


def extract_json_block(text: str) -> dict | None:
    """Last fenced ```json block in the text, parsed; None when absent or
    malformed."""
    matches = _JSON_BLOCK.findall(text)
    for raw in reversed(matches):
        try:
            value = json.loads(raw)
        except ValueError:
            continue
        if isinstance(value, dict):
            return value
    return None


def assemble_document(stage1: dict, stage2: dict, stage3: dict) -> dict:
    """Merge the three stage outputs into one config document. Missing or
    odd pieces are left for validation to flag."""
    doc: dict = {"version": 1}
    if isinstance(stage1.get("description"), str):
        doc["description"] = stage1["description"]
    doc["agents"] = stage1.get("agents", {})
    sop: dict = {"initial_state": stage2.get("initial_state", ""),
                 "states": copy.deepcopy(stage2.get("states", {}))}
    if isinstance(stage2.get("max_steps"), int):
        sop["max_steps"] = stage2["max_steps"]
    components = stage3.get("components", {})
    if isinstance(components, dict) and isinstance(sop["states"], dict):
        for state, comps in components.items():
            if state in sop["states"] and isinstance(sop["states"][state], dict):
                sop["states"][state]["components"] = comps
    doc["sop"] = sop
    return doc


def _repair(gateway: ProviderGateway, profile: LlmProfile, document: dict,
            report: cfg.ValidationReport) -> dict | None:
    errors = "\n".join(f"- {issue.path}: [{issue.code}] {issue.message}"
                       for issue in report.errors)
    messages = [
        ChatMessage(role="system", content=(
            "You repair workflow config documents. You receive a JSON "
            "document and the validation errors it produced. Fix every "
            "error while changing as little as possible.")),
        ChatMessage(role="user", content=(
            f"Document:\n```json\n"
            f"{json.dumps(document, indent=2, sort_keys=True)}\n```\n\n"
            f"Validation errors:\n{errors}\n\n"
            f"Reply with the corrected complete document in one fenced "
            f"```json block.")),
    ]
    response = gateway.complete(ChatRequest(messages=messages),
                                profile=profile, purpose="repair")
    return extract_json_block(response.content)


def generate_config(task: str, *, llm: LlmProfile,
                    library: ExemplarLibrary | None = None,
                    exemplar_dir: str | Path | None = None,
                    max_validation_attempts: int = MAX_VALIDATION_ATTEMPTS,
                    gateway: ProviderGateway | None = None) -> GenerationResult:
    """Generate a config for ``task`` using the given LLM profile.

    ``library`` (or ``exemplar_dir`` to build one on the fly) supplies the
    demonstration workflows. The same gateway serves the whole pipeline, so
    a scripted mock can drive generation end to end.
    """
    raw_meta = _meta_document()
    raw_meta["llm"] = {"provider": "mock", "script": []}
    base = cfg.parse_config(json.dumps(raw_meta))
    meta_config = replace(base, llm=llm)
    if gateway is None:
        gateway = ProviderGateway(meta_config)
    if library is None and exemplar_dir is not None:
        library = build_library(exemplar_dir, gateway)
    exemplars = library.top(task, gateway) if library is not None else []

    substituted = _substitute(raw_meta, {
        TASK_PLACEHOLDER: task,
        EXEMPLARS_PLACEHOLDER: _render_exemplars(exemplars),
    })
    session_config = replace(cfg.parse_config(json.dumps(substituted)), llm=llm)
    runtime = SessionRuntime(session_config, gateway=gateway)
    session = runtime.run()

    actions = [e.payload["content"] for e in session.events
               if e.kind == "ActionEmitted"]
    stages = [extract_json_block(text) or {} for text in actions]
    while len(stages) < 3:
        stages.append({})
    document = assemble_document(stages[0], stages[1], stages[2])

    registry = default_registry()
    attempts = 0
    report = cfg.ValidationReport(False, [], [])
    while attempts < max_validation_attempts:
        report = cfg.validate_document(document, registry)
        attempts += 1
        if report.ok or attempts >= max_validation_attempts:
            break
        repaired = _repair(gateway, llm, document, report)
        if repaired is not None:
            document = repaired
    config = None
    if report.ok:
        try:
            config = cfg.parse_config(json.dumps(document))
        except cfg.ConfigError as exc:  # report said ok, so this is a bug
            log.error("validated document failed to parse: %s", exc)
    return GenerationResult(document=document, report=report, config=config,
                            attempts=attempts, stage_outputs=stages,
                            exemplars_used=[e.name for e in exemplars],
                            session_events=session.events)
