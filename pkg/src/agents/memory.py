"""Agent memory: a long-term vector store and a short-term scratchpad.

The long-term store is append-only with dense integer ids. Retrieval is
exact brute-force cosine: similarities are computed one record at a time
(float64 dot products), sorted by similarity descending with ties broken by
lower id. No approximate index: stores stay small (hundreds of records per
agent per session) and exactness keeps replays reproducible.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_K = 3
SCRATCHPAD_MAX_CHARS = 2000

_LAST_WS = re.compile(r"\s\S*$")


@dataclass(frozen=True)
class MemoryRecord:
    id: int
    text: str
    vector: np.ndarray
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RetrievedMemory:
    record: MemoryRecord
    similarity: float


class LongTermMemory:
    def __init__(self, dim: int | None = None):
        self.records: list[MemoryRecord] = []
        self._dim = dim

    @property
    def dim(self) -> int | None:
        if self._dim is not None:
            return self._dim
        return self.records[0].vector.shape[0] if self.records else None

    def add(self, text: str, vector: np.ndarray, metadata: dict | None = None) -> int:
        vec = np.asarray(vector, dtype=np.float64)
        record = MemoryRecord(id=len(self.records), text=text, vector=vec,
                              metadata=dict(metadata or {}))
        self.records.append(record)
        return record.id

    def query(self, vector: np.ndarray, k: int = DEFAULT_K) -> list[RetrievedMemory]:
        if not self.records or k <= 0:
            return []
        query = np.asarray(vector, dtype=np.float64)
        qnorm = float(np.linalg.norm(query))
        scored: list[RetrievedMemory] = []
        for record in self.records:
            vnorm = float(np.linalg.norm(record.vector))
            if qnorm == 0.0 or vnorm == 0.0:
                sim = 0.0
            else:
                sim = float(np.dot(query, record.vector)) / (qnorm * vnorm)
            scored.append(RetrievedMemory(record=record, similarity=sim))
        scored.sort(key=lambda m: (-m.similarity, m.record.id))
        return scored[:k]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(json.dumps({
                    "id": record.id,
                    "text": record.text,
                    "vector": record.vector.tolist(),
                    "metadata": record.metadata,
                }, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LongTermMemory":
        store = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            raw = json.loads(line)
            record = MemoryRecord(
                id=raw["id"], text=raw["text"],
                vector=np.array(raw["vector"], dtype=np.float64),
                metadata=raw.get("metadata", {}))
            if record.id != len(store.records):
                raise ValueError(f"non-dense memory id {record.id} in {path}")
            store.records.append(record)
        return store


def truncate_at_word(text: str, max_chars: int) -> str:
    """Cut to at most max_chars without splitting a word; a single word
    longer than the limit is hard-cut."""
    if len(text) <= max_chars:
        return text
    cut = text[:max_chars]
    if not text[max_chars].isspace() and not cut[-1].isspace():
        shorter = _LAST_WS.sub("", cut)
        if shorter:
            cut = shorter
    return cut.rstrip()


@dataclass
class Scratchpad:
    """Rolling working summary an agent rewrites after each of its turns."""

    content: str = ""
    last_updated_turn: int = 0
    max_chars: int = SCRATCHPAD_MAX_CHARS

    def update(self, new_content: str) -> None:
        self.content = truncate_at_word(new_content.strip(), self.max_chars)
        self.last_updated_turn += 1


def format_sim(similarity: float) -> str:
    return f"{similarity:.3f}"
