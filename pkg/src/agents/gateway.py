"""LLM provider gateway: chat completions and embeddings.

Two providers share an interface: ``openai-compatible`` speaks the usual
chat-completions / embeddings HTTP shape via httpx, and ``mock`` replays a
scripted list of responses so whole sessions run deterministically offline.

The mock consumes its script by scanning the not-yet-consumed entries in
order and firing the first one whose ``match`` substring occurs in the
request text (entries without ``match`` always fire). Unmatched entries
therefore fire strictly in script order, while matched entries can be
consumed out of order when requests interleave.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import LlmProfile, SystemConfig

log = logging.getLogger(__name__)

EMBED_DIM = 256
HTTP_ATTEMPTS = 3
BACKOFF_BASE_SECONDS = 0.5


class GatewayError(Exception):
    pass


class AuthError(GatewayError):
    """The configured API key environment variable is not set."""


class ProviderError(GatewayError):
    """The provider kept failing after retries, or rejected the request."""


class ScriptExhausted(GatewayError):
    """No remaining mock script entry fires for this request."""


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str
    name: str | None = None


@dataclass(frozen=True)
class FunctionCall:
    name: str
    arguments: dict


@dataclass(frozen=True)
class ChatRequest:
    messages: list
    functions: list = field(default_factory=list)


@dataclass(frozen=True)
class ChatResponse:
    content: str = ""
    function_call: FunctionCall | None = None
    usage: dict = field(default_factory=dict)


def mock_embedding(text: str, dim: int = EMBED_DIM) -> np.ndarray:
    """Hashed bag-of-words embedding: lowercase, split on whitespace, hash
    each token into one of ``dim`` buckets, count, L2-normalize. A pure
    function of the text, so retrieval is reproducible anywhere."""
    vec = np.zeros(dim, dtype=np.float64)
    for token in text.lower().split():
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        vec[int.from_bytes(digest, "big") % dim] += 1.0
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def _token_count(text: str) -> int:
    return len(text.split())


@dataclass
class _ScriptEntry:
    match: str | None
    respond: ChatResponse
    consumed: bool = False


def _load_script(script: str | list, base_dir: Path | None) -> list[_ScriptEntry]:
    if isinstance(script, str):
        path = Path(script)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".ndjson":
            raw = [json.loads(line) for line in text.splitlines() if line.strip()]
        else:
            raw = json.loads(text)
    else:
        raw = script
    if not isinstance(raw, list):
        raise ProviderError("mock script must be a list of entries")
    entries = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "respond" not in item:
            raise ProviderError(f"mock script entry {i} needs a 'respond' field")
        respond = item["respond"]
        fc = None
        if isinstance(respond, dict) and "function_call" in respond:
            fc = FunctionCall(name=respond["function_call"]["name"],
                              arguments=respond["function_call"].get("arguments", {}))
            content = respond.get("content", "")
        elif isinstance(respond, dict):
            content = respond.get("content", "")
        else:
            content = str(respond)
        entries.append(_ScriptEntry(
            match=item.get("match"),
            respond=ChatResponse(content=content, function_call=fc),
        ))
    return entries


class ProviderGateway:
    """One gateway per session. Tracks per-purpose call counts, writes an
    optional ndjson trace, and keeps mock script consumption isolated."""

    def __init__(self, config: SystemConfig, *, base_dir: str | Path | None = None,
                 trace_path: str | Path | None = None):
        self.config = config
        self.base_dir = Path(base_dir) if base_dir is not None else None
        self.trace_path = Path(trace_path) if trace_path is not None else None
        self.counts: dict = {}
        self._scripts: dict = {}  # id(profile-key) -> entry list
        self._client = None

    # -- chat ---------------------------------------------------------------

    def complete(self, request: ChatRequest, *, profile: LlmProfile | None = None,
                 purpose: str = "act", agent: str | None = None) -> ChatResponse:
        profile = profile or self.config.llm
        self.counts[purpose] = self.counts.get(purpose, 0) + 1
        if profile.provider == "mock":
            response = self._complete_mock(profile, request)
        else:
            response = self._complete_http(profile, request)
        self._trace({
            "kind": "complete", "purpose": purpose, "agent": agent,
            "model": profile.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "functions": [f.get("name") for f in request.functions],
            "response": {
                "content": response.content,
                "function_call": None if response.function_call is None else {
                    "name": response.function_call.name,
                    "arguments": response.function_call.arguments,
                },
            },
        })
        return response

    def _script_for(self, profile: LlmProfile) -> list:
        key = id(profile)
        if key not in self._scripts:
            self._scripts[key] = _load_script(profile.script, self.base_dir)
        return self._scripts[key]

    def _complete_mock(self, profile: LlmProfile, request: ChatRequest) -> ChatResponse:
        haystack = "\n".join(m.content for m in request.messages)
        for entry in self._script_for(profile):
            if entry.consumed:
                continue
            if entry.match is None or entry.match in haystack:
                entry.consumed = True
                usage = {
                    "prompt_tokens": sum(_token_count(m.content) for m in request.messages),
                    "completion_tokens": _token_count(entry.respond.content),
                }
                return ChatResponse(content=entry.respond.content,
                                    function_call=entry.respond.function_call,
                                    usage=usage)
        raise ScriptExhausted(
            f"no mock script entry fires for this request (last message: "
            f"{request.messages[-1].content[:120]!r})")

    def _complete_http(self, profile: LlmProfile, request: ChatRequest) -> ChatResponse:
        payload: dict = {
            "model": profile.model,
            "temperature": profile.temperature,
            "max_tokens": profile.max_output_tokens,
            "messages": [
                {k: v for k, v in
                 (("role", m.role), ("content", m.content), ("name", m.name))
                 if v is not None}
                for m in request.messages
            ],
        }
        if request.functions:
            payload["functions"] = request.functions
        data = self._post(profile, "/chat/completions", payload)
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError) as exc:
            raise ProviderError(f"malformed completion response: {exc}") from exc
        fc = None
        if message.get("function_call"):
            raw = message["function_call"]
            try:
                arguments = json.loads(raw.get("arguments") or "{}")
            except ValueError:
                arguments = {}
            fc = FunctionCall(name=raw.get("name", ""), arguments=arguments)
        return ChatResponse(content=message.get("content") or "",
                            function_call=fc, usage=data.get("usage", {}))

    # -- embeddings ----------------------------------------------------------

    def embed(self, texts: list) -> np.ndarray:
        """Embed a batch of texts with the config-level profile. Returns a
        (len(texts), dim) float64 array of unit (or zero) vectors."""
        profile = self.config.llm
        if profile.provider == "mock":
            return np.stack([mock_embedding(t) for t in texts]) if texts else \
                np.zeros((0, EMBED_DIM), dtype=np.float64)
        data = self._post(profile, "/embeddings",
                          {"model": profile.model, "input": list(texts)})
        try:
            rows = sorted(data["data"], key=lambda d: d["index"])
            return np.array([row["embedding"] for row in rows], dtype=np.float64)
        except (KeyError, TypeError) as exc:
            raise ProviderError(f"malformed embeddings response: {exc}") from exc

    # -- transport -----------------------------------------------------------

    def _post(self, profile: LlmProfile, route: str, payload: dict) -> dict:
        import httpx

        key = os.environ.get(profile.api_key_env)
        if not key:
            raise AuthError(
                f"environment variable {profile.api_key_env} is not set")
        if self._client is None:
            self._client = httpx.Client(timeout=30.0)
        url = profile.api_base.rstrip("/") + route
        headers = {"Authorization": f"Bearer {key}"}
        last_error: Exception | None = None
        for attempt in range(HTTP_ATTEMPTS):
            if attempt:
                time.sleep(BACKOFF_BASE_SECONDS * (2 ** (attempt - 1)))
            try:
                response = self._client.post(url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                log.warning("provider request failed (attempt %d): %s", attempt + 1, exc)
                continue
            if response.status_code == 200:
                return response.json()
            if response.status_code in (429,) or response.status_code >= 500:
                last_error = ProviderError(
                    f"provider returned {response.status_code}")
                log.warning("provider returned %d (attempt %d)",
                            response.status_code, attempt + 1)
                continue
            raise ProviderError(
                f"provider returned {response.status_code}: {response.text[:200]}")
        raise ProviderError(f"provider unavailable after {HTTP_ATTEMPTS} attempts: "
                            f"{last_error}")

    # -- trace ---------------------------------------------------------------

    def _trace(self, record: dict) -> None:
        if self.trace_path is None:
            return
        self.trace_path.parent.mkdir(parents=True, exist_ok=True)
        with self.trace_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None
