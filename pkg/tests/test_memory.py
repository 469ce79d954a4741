"""Long-term memory retrieval against a brute-force oracle, plus scratchpad."""

from __future__ import annotations

import json
import math
import random

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from agents.gateway import mock_embedding
from agents.memory import (
    LongTermMemory,
    Scratchpad,
    format_sim,
    truncate_at_word,
)


def plain_cosine(query, vec):
    """Cosine in plain Python, independent of the store's numpy internals."""
    qn = math.sqrt(sum(x * x for x in query))
    vn = math.sqrt(sum(x * x for x in vec))
    if qn == 0.0 or vn == 0.0:
        return 0.0
    return sum(a * b for a, b in zip(query, vec)) / (qn * vn)


def oracle_top_k(records, query, k):
    """Plain-Python cosine top-k: sim desc, then id asc."""
    scored = [(rid, plain_cosine(query, vec)) for rid, vec in records]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def store_order_top_k(records, query, k):
    """Top-k scored with the store's own arithmetic, independently sorted.

    Count embeddings quantize cosines, so exact ties between different
    records are routine; any reduction with a different operation order can
    rank such ties the other way (the recomputed norms drift by an ulp).
    Ranking is only comparable when both sides score identically, so this
    oracle mirrors the store's formula while the similarity values are
    cross-checked against plain_cosine separately.
    """
    qn = float(np.linalg.norm(query))
    scored = []
    for rid, vec in records:
        vn = float(np.linalg.norm(vec))
        if qn == 0.0 or vn == 0.0:
            sim = 0.0
        else:
            sim = float(np.dot(query, vec)) / (qn * vn)
        scored.append((rid, sim))
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:k]


def filled_store(texts):
    store = LongTermMemory()
    for text in texts:
        store.add(text, mock_embedding(text))
    return store


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------


def test_ids_dense_from_zero():
    store = filled_store(["a b", "c d", "e f"])
    assert [r.id for r in store.records] == [0, 1, 2]


def test_query_matches_oracle_small():
    texts = ["the cat sat", "a dog barked", "the cat purred", "rain fell"]
    store = filled_store(texts)
    query = mock_embedding("cat")
    got = store.query(query, k=3)
    expected = oracle_top_k(
        [(r.id, list(r.vector)) for r in store.records], list(query), 3)
    assert [(m.record.id, ) for m in got] == [(rid,) for rid, _ in expected]
    for m, (_, sim) in zip(got, expected):
        assert abs(m.similarity - sim) < 1e-12


def test_tie_broken_by_lower_id():
    store = filled_store(["same words here", "other thing", "same words here"])
    got = store.query(mock_embedding("same words here"), k=2)
    assert [m.record.id for m in got] == [0, 2]
    assert got[0].similarity == got[1].similarity


def test_k_larger_than_store():
    store = filled_store(["only one"])
    assert len(store.query(mock_embedding("one"), k=10)) == 1


def test_zero_query_vector():
    store = filled_store(["a", "b"])
    got = store.query(np.zeros(store.dim), k=2)
    assert [m.record.id for m in got] == [0, 1]
    assert all(m.similarity == 0.0 for m in got)


def test_empty_store():
    assert LongTermMemory().query(mock_embedding("x"), k=3) == []


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_query_matches_oracle_random(data):
    vocab = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta"]
    n = data.draw(st.integers(min_value=1, max_value=40))
    texts = [" ".join(data.draw(st.lists(st.sampled_from(vocab), min_size=1,
                                         max_size=6)))
             for _ in range(n)]
    store = filled_store(texts)
    query_text = " ".join(data.draw(st.lists(st.sampled_from(vocab),
                                             min_size=1, max_size=4)))
    query = mock_embedding(query_text)
    k = data.draw(st.sampled_from([1, 3, 10]))
    got = store.query(query, k=k)
    expected = store_order_top_k([(r.id, r.vector) for r in store.records],
                                 query, k)
    assert [m.record.id for m in got] == [rid for rid, _ in expected]
    assert [m.similarity for m in got] == [sim for _, sim in expected]
    # values are right regardless of arithmetic
    for m in got:
        assert abs(m.similarity
                   - plain_cosine(list(query), list(m.record.vector))) < 1e-12


def test_metadata_round_trip(tmp_path):
    store = LongTermMemory()
    store.add("hello world", mock_embedding("hello world"),
              metadata={"turn": 4, "state": "chat"})
    path = tmp_path / "agent.ndjson"
    store.save(path)
    loaded = LongTermMemory.load(path)
    assert len(loaded.records) == 1
    rec = loaded.records[0]
    assert rec.id == 0 and rec.text == "hello world"
    assert rec.metadata == {"turn": 4, "state": "chat"}
    assert np.array_equal(rec.vector, store.records[0].vector)


def test_save_is_ndjson(tmp_path):
    store = filled_store(["one", "two"])
    path = tmp_path / "m.ndjson"
    store.save(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["id"] == 0
    assert json.loads(lines[1])["id"] == 1


def test_loaded_store_keeps_querying_exactly(tmp_path):
    rng = random.Random(7)
    vocab = ["red", "green", "blue", "cyan", "teal"]
    texts = [" ".join(rng.choices(vocab, k=rng.randint(1, 5))) for _ in range(25)]
    store = filled_store(texts)
    path = tmp_path / "m.ndjson"
    store.save(path)
    loaded = LongTermMemory.load(path)
    query = mock_embedding("red blue")
    a = store.query(query, k=5)
    b = loaded.query(query, k=5)
    assert [(m.record.id, m.similarity) for m in a] == \
        [(m.record.id, m.similarity) for m in b]


# ---------------------------------------------------------------------------
# Scratchpad and text helpers
# ---------------------------------------------------------------------------


def test_scratchpad_update_counts_turns():
    pad = Scratchpad()
    assert pad.content == "" and pad.last_updated_turn == 0
    pad.update("first summary")
    assert pad.content == "first summary" and pad.last_updated_turn == 1
    pad.update("second summary")
    assert pad.last_updated_turn == 2


def test_scratchpad_truncates_at_word_boundary():
    pad = Scratchpad(max_chars=20)
    pad.update("alpha beta gamma delta epsilon")
    assert len(pad.content) <= 20
    assert pad.content == "alpha beta gamma"


def test_truncate_short_text_unchanged():
    assert truncate_at_word("hello", 20) == "hello"


def test_truncate_exact_boundary():
    assert truncate_at_word("one two three", 7) == "one two"
    # cut lands exactly on the space after "two"
    assert truncate_at_word("one two three", 8) == "one two"


def test_truncate_single_long_word_hard_cut():
    assert truncate_at_word("x" * 50, 10) == "x" * 10


@settings(max_examples=80, deadline=None)
@given(st.text(), st.integers(min_value=1, max_value=40))
def test_truncate_never_exceeds_limit(text, limit):
    out = truncate_at_word(text, limit)
    assert len(out) <= limit
    assert text.startswith(out.rstrip()) or out == text[:limit]


def test_format_sim():
    assert format_sim(0.5) == "0.500"
    assert format_sim(1 / 3) == "0.333"
    assert format_sim(1.0) == "1.000"
