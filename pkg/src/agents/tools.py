"""Tool registry and built-in tools.

Tools never raise past an agent turn: every invocation returns a ToolResult,
and failures come back as ``ok=False`` with the error message. Built-ins:

- ``echo``: returns its input (used to exercise the tool path in tests).
- ``web_search``: queries the HTTP backend named by the
  ``AGENTS_SEARCH_BACKEND`` environment variable.
- ``web_fetch``: fetches a URL and strips HTML to readable text.
- ``knowledge_base_query``: retrieves the best-matching chunks from a local
  document folder using the embedding provider.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from pathlib import Path

from .memory import LongTermMemory, format_sim, truncate_at_word

log = logging.getLogger(__name__)

SEARCH_BACKEND_ENV = "AGENTS_SEARCH_BACKEND"
FETCH_MAX_CHARS = 4000
TRUNCATION_MARKER = "\n[truncated]"
KB_CHUNK_CHARS = 500
KB_DEFAULT_K = 3
DIGEST_CHARS = 160


def result_digest(text: str) -> str:
    """Short deterministic digest of a tool result for event payloads."""
    return " ".join(text.split())[:DIGEST_CHARS]


@dataclass(frozen=True)
class ToolResult:
    tool_name: str
    ok: bool
    content: str
    error: str | None = None

    @property
    def digest(self) -> str:
        return result_digest(self.content if self.ok else (self.error or ""))


@dataclass(frozen=True)
class ToolSpec:
    name: str
    fn: object
    description: str
    parameters: dict


@dataclass
class ToolContext:
    """Everything a tool may need; injected so tests can fake transport."""

    gateway: object | None = None
    kb_root: Path = field(default_factory=lambda: Path("kb"))
    http_client: object | None = None

    def client(self):
        if self.http_client is None:
            import httpx

            self.http_client = httpx.Client(timeout=20.0,
                                            follow_redirects=True)
        return self.http_client


class ToolRegistry:
    def __init__(self):
        self._tools: dict = {}
        self._kb_cache: dict = {}

    def register(self, name: str, fn, description: str, parameters: dict) -> None:
        self._tools[name] = ToolSpec(name=name, fn=fn, description=description,
                                     parameters=parameters)

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def names(self) -> list:
        return sorted(self._tools)

    def function_specs(self, names: list) -> list:
        """OpenAI function-calling schemas for the given tools."""
        specs = []
        for name in names:
            if name in self._tools:
                spec = self._tools[name]
                specs.append({"name": spec.name,
                              "description": spec.description,
                              "parameters": spec.parameters})
        return specs

    def invoke(self, name: str, params: dict, context: ToolContext) -> ToolResult:
        if name not in self._tools:
            return ToolResult(tool_name=name, ok=False, content="",
                              error=f"unknown tool {name!r}")
        try:
            content = self._tools[name].fn(dict(params), context, self)
            return ToolResult(tool_name=name, ok=True, content=content)
        except Exception as exc:  # tool failures degrade, never abort a turn
            log.warning("tool %s failed: %s", name, exc)
            return ToolResult(tool_name=name, ok=False, content="",
                              error=f"{type(exc).__name__}: {exc}")


# ---------------------------------------------------------------------------
# Built-ins
# ---------------------------------------------------------------------------


def _echo(params: dict, context: ToolContext, registry: ToolRegistry) -> str:
    return str(params.get("text", ""))


def _web_search(params: dict, context: ToolContext, registry: ToolRegistry) -> str:
    query = str(params.get("query", "")).strip()
    if not query:
        raise ValueError("web_search needs a non-empty 'query'")
    backend = os.environ.get(SEARCH_BACKEND_ENV)
    if not backend:
        raise RuntimeError(
            f"no search backend configured (set {SEARCH_BACKEND_ENV})")
    limit = int(params.get("max_results", 3))
    response = context.client().get(backend, params={"q": query, "n": limit})
    response.raise_for_status()
    data = response.json()
    results = data.get("results", data) if isinstance(data, dict) else data
    lines = []
    for i, item in enumerate(results[:limit]):
        lines.append(f"{i + 1}. {item.get('title', '(untitled)')} - "
                     f"{item.get('url', '')}\n   {item.get('snippet', '')}")
    return "\n".join(lines) if lines else "(no results)"


class _TextExtractor(HTMLParser):
    _SKIP = {"script", "style", "noscript", "template"}

    def __init__(self):
        super().__init__()
        self.chunks: list = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth:
            self._skip_depth -= 1

    def handle_data(self, data):
        if not self._skip_depth and data.strip():
            self.chunks.append(data.strip())


def strip_html(html: str) -> str:
    parser = _TextExtractor()
    parser.feed(html)
    text = "\n".join(parser.chunks)
    return re.sub(r"\n{3,}", "\n\n", text).strip()


def _web_fetch(params: dict, context: ToolContext, registry: ToolRegistry) -> str:
    url = str(params.get("url", "")).strip()
    if not url.startswith(("http://", "https://")):
        raise ValueError("web_fetch needs an http(s) 'url'")
    max_chars = int(params.get("max_chars", FETCH_MAX_CHARS))
    response = context.client().get(url)
    response.raise_for_status()
    content_type = response.headers.get("content-type", "")
    text = response.text
    if "html" in content_type or text.lstrip()[:1] == "<":
        text = strip_html(text)
    if len(text) > max_chars:
        text = truncate_at_word(text, max_chars) + TRUNCATION_MARKER
    return text


def chunk_document(text: str, max_chars: int = KB_CHUNK_CHARS) -> list:
    """Pack paragraphs into chunks of at most max_chars; paragraphs longer
    than the limit are split at word boundaries."""
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", text) if p.strip()]
    pieces: list = []
    for para in paragraphs:
        while len(para) > max_chars:
            head = truncate_at_word(para, max_chars)
            if not head:
                head = para[:max_chars]
            pieces.append(head)
            para = para[len(head):].strip()
        if para:
            pieces.append(para)
    chunks: list = []
    current = ""
    for piece in pieces:
        candidate = f"{current}\n\n{piece}" if current else piece
        if current and len(candidate) > max_chars:
            chunks.append(current)
            current = piece
        else:
            current = candidate
    if current:
        chunks.append(current)
    return chunks


def _kb_store(kb_id: str, context: ToolContext, registry: ToolRegistry) -> LongTermMemory:
    cached = registry._kb_cache.get(kb_id)
    if cached is not None:
        return cached
    if context.gateway is None:
        raise RuntimeError("knowledge_base_query needs an embedding provider")
    root = context.kb_root / kb_id
    if not root.is_dir():
        raise FileNotFoundError(f"knowledge base {kb_id!r} not found under "
                                f"{context.kb_root}")
    files = sorted(p for p in root.iterdir()
                   if p.suffix in (".txt", ".md") and p.is_file())
    if not files:
        raise FileNotFoundError(f"knowledge base {kb_id!r} has no .txt/.md files")
    store = LongTermMemory()
    texts, metas = [], []
    for path in files:
        for chunk in chunk_document(path.read_text(encoding="utf-8")):
            texts.append(chunk)
            metas.append({"source": path.name})
    vectors = context.gateway.embed(texts)
    for text, vec, meta in zip(texts, vectors, metas):
        store.add(text, vec, metadata=meta)
    registry._kb_cache[kb_id] = store
    return store


def _knowledge_base_query(params: dict, context: ToolContext,
                          registry: ToolRegistry) -> str:
    kb_id = str(params.get("kb_id", "")).strip()
    query = str(params.get("query", "")).strip()
    if not kb_id or not query:
        raise ValueError("knowledge_base_query needs 'kb_id' and 'query'")
    k = int(params.get("k", KB_DEFAULT_K))
    store = _kb_store(kb_id, context, registry)
    query_vec = context.gateway.embed([query])[0]
    hits = store.query(query_vec, k=k)
    lines = []
    for hit in hits:
        source = hit.record.metadata.get("source", "?")
        lines.append(f"[{source} | {format_sim(hit.similarity)}] {hit.record.text}")
    return "\n\n".join(lines) if lines else "(no matches)"


def default_registry() -> ToolRegistry:
    registry = ToolRegistry()
    registry.register(
        "echo", _echo,
        "Return the given text unchanged.",
        {"type": "object", "properties": {"text": {"type": "string"}},
         "required": ["text"]})
    registry.register(
        "web_search", _web_search,
        "Search the web and return the top results with titles and snippets.",
        {"type": "object",
         "properties": {"query": {"type": "string"},
                        "max_results": {"type": "integer"}},
         "required": ["query"]})
    registry.register(
        "web_fetch", _web_fetch,
        "Fetch a URL and return its readable text content.",
        {"type": "object",
         "properties": {"url": {"type": "string"},
                        "max_chars": {"type": "integer"}},
         "required": ["url"]})
    registry.register(
        "knowledge_base_query", _knowledge_base_query,
        "Retrieve the most relevant chunks from a local knowledge base.",
        {"type": "object",
         "properties": {"kb_id": {"type": "string"},
                        "query": {"type": "string"},
                        "k": {"type": "integer"}},
         "required": ["kb_id", "query"]})
    return registry
