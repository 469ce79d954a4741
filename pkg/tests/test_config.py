"""Config parsing, validation, and canonicalization."""

from __future__ import annotations

import copy
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agents import config as cfg


def base_config() -> dict:
    return {
        "version": 1,
        "llm": {"provider": "mock", "script": []},
        "agents": {
            "alice": {"role": "Host who keeps the discussion moving."},
            "bob": {"role": "Guest expert.", "memory": {"long_term": True}},
        },
        "sop": {
            "initial_state": "intro",
            "states": {
                "intro": {
                    "agents": ["alice"],
                    "transitions": ["chat"],
                    "components": {
                        "*": [{"kind": "prompt", "part": "task",
                               "text": "Open the show."}],
                    },
                },
                "chat": {
                    "agents": ["alice", "bob"],
                    "transitions": ["wrap"],
                },
                "wrap": {
                    "agents": ["alice"],
                    "terminal": True,
                    "max_turns": 1,
                },
            },
        },
    }


def parse(doc: dict) -> cfg.SystemConfig:
    return cfg.parse_config(json.dumps(doc))


class FakeRegistry:
    def __init__(self, names):
        self.names = set(names)

    def __contains__(self, name):
        return name in self.names


# ---------------------------------------------------------------------------
# Parsing and defaults
# ---------------------------------------------------------------------------


def test_parse_fills_defaults():
    config = parse(base_config())
    assert config.version == 1
    assert config.llm.provider == "mock"
    assert config.llm.model == "mock"
    assert config.llm.temperature == 0.0
    assert config.llm.max_output_tokens == 1024
    assert config.sop.max_steps == 100
    assert config.sop.dynamic_planning is False
    assert config.environment.visibility == "public"
    assert config.environment.window == 10
    alice = config.agents["alice"]
    assert alice.is_human is False
    assert alice.memory == cfg.MemoryFlags(False, False)
    assert config.agents["bob"].memory.long_term is True
    intro = config.sop.states["intro"]
    assert intro.terminal is False
    assert intro.max_turns is None
    assert intro.components["*"][0].part == "task"
    wrap = config.sop.states["wrap"]
    assert wrap.terminal is True and wrap.max_turns == 1


def test_parse_accepts_bytes_and_str():
    doc = json.dumps(base_config())
    assert cfg.parse_config(doc) == cfg.parse_config(doc.encode("utf-8"))


def test_llm_defaults_when_absent():
    doc = base_config()
    del doc["llm"]
    config = parse(doc)
    assert config.llm.provider == "mock"
    assert config.llm.script == []


def test_syntax_error():
    with pytest.raises(cfg.ConfigSyntaxError):
        cfg.parse_config("{not json")


def test_duplicate_keys_rejected():
    text = '{"version": 1, "version": 1}'
    with pytest.raises(cfg.ConfigSyntaxError):
        cfg.parse_config(text)


def test_unknown_key_rejected():
    doc = base_config()
    doc["extra"] = 1
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "extra"


def test_unknown_nested_key_rejected():
    doc = base_config()
    doc["agents"]["alice"]["colour"] = "blue"
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "agents.alice.colour"


def test_version_unsupported():
    doc = base_config()
    doc["version"] = 2
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "version"


def test_agent_name_pattern():
    doc = base_config()
    doc["agents"]["bad name!"] = {"role": "x"}
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "agents.bad name!"


def test_role_required():
    doc = base_config()
    del doc["agents"]["alice"]["role"]
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "agents.alice.role"


def test_mock_script_required():
    doc = base_config()
    del doc["llm"]["script"]
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "llm.script"


def test_nonterminal_state_needs_agents():
    doc = base_config()
    doc["sop"]["states"]["chat"]["agents"] = []
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "sop.states.chat.agents"


def test_terminal_state_may_omit_agents():
    doc = base_config()
    doc["sop"]["states"]["wrap"]["agents"] = []
    config = parse(doc)
    assert config.sop.states["wrap"].agents == []


def test_prompt_part_enum():
    doc = base_config()
    doc["sop"]["states"]["intro"]["components"]["*"][0]["part"] = "vibes"
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "sop.states.intro.components.*[0].part"


def test_max_turns_must_be_positive():
    doc = base_config()
    doc["sop"]["states"]["wrap"]["max_turns"] = 0
    with pytest.raises(cfg.ConfigSchemaError):
        parse(doc)


def test_negative_temperature_rejected():
    doc = base_config()
    doc["llm"]["temperature"] = -0.5
    with pytest.raises(cfg.ConfigSchemaError) as err:
        parse(doc)
    assert err.value.path == "llm.temperature"


# ---------------------------------------------------------------------------
# Reference errors
# ---------------------------------------------------------------------------


def test_dangling_initial_state():
    doc = base_config()
    doc["sop"]["initial_state"] = "nowhere"
    with pytest.raises(cfg.ConfigReferenceError) as err:
        parse(doc)
    assert err.value.path == "sop.initial_state"


def test_dangling_transition():
    doc = base_config()
    doc["sop"]["states"]["chat"]["transitions"] = ["wrap", "ghost"]
    with pytest.raises(cfg.ConfigReferenceError) as err:
        parse(doc)
    assert err.value.path == "sop.states.chat.transitions[1]"


def test_undeclared_state_agent():
    doc = base_config()
    doc["sop"]["states"]["chat"]["agents"].append("carol")
    with pytest.raises(cfg.ConfigReferenceError) as err:
        parse(doc)
    assert err.value.path == "sop.states.chat.agents[2]"


def test_undeclared_component_key():
    doc = base_config()
    doc["sop"]["states"]["intro"]["components"]["carol"] = [
        {"kind": "prompt", "part": "task", "text": "x"}
    ]
    with pytest.raises(cfg.ConfigReferenceError) as err:
        parse(doc)
    assert err.value.path == "sop.states.intro.components.carol"


def test_visibility_references_checked():
    doc = base_config()
    doc["environment"] = {"visibility": {"chat": ["alice", "mallory"]}}
    with pytest.raises(cfg.ConfigReferenceError) as err:
        parse(doc)
    assert err.value.path == "environment.visibility.chat[1]"


# ---------------------------------------------------------------------------
# validate / validate_document
# ---------------------------------------------------------------------------


def test_validate_ok():
    report = cfg.validate(parse(base_config()), FakeRegistry(["echo"]))
    assert report.ok and report.errors == [] and report.warnings == []


def test_validate_unknown_tool():
    doc = base_config()
    doc["sop"]["states"]["intro"]["components"]["*"].append(
        {"kind": "tool", "name": "teleport"})
    report = cfg.validate(parse(doc), FakeRegistry(["echo"]))
    assert not report.ok
    assert report.errors[0].code == cfg.TOOL_UNKNOWN
    assert report.errors[0].path == "sop.states.intro.components.*[1].name"


def test_validate_without_registry_skips_tools():
    doc = base_config()
    doc["sop"]["states"]["intro"]["components"]["*"].append(
        {"kind": "tool", "name": "teleport"})
    assert cfg.validate(parse(doc)).ok


def test_unreachable_state_is_warning():
    doc = base_config()
    doc["sop"]["states"]["island"] = {"agents": ["alice"], "terminal": True}
    report = cfg.validate(parse(doc))
    assert report.ok  # warnings do not fail validation
    assert [w.code for w in report.warnings] == [cfg.STATE_UNREACHABLE]
    assert report.warnings[0].path == "sop.states.island"


def test_validate_document_collects_everything():
    doc = base_config()
    doc["version"] = 3
    doc["agents"]["bad name!"] = {"role": "x"}
    report = cfg.validate_document(doc)
    codes = {e.code for e in report.errors}
    assert cfg.VERSION_UNSUPPORTED in codes
    assert cfg.NAME_INVALID in codes


def test_validate_document_reference_error():
    doc = base_config()
    doc["sop"]["initial_state"] = "nowhere"
    report = cfg.validate_document(json.dumps(doc))
    assert not report.ok
    assert report.errors[0].code == cfg.REFERENCE_ERROR


def test_validate_document_syntax_error():
    report = cfg.validate_document(b"\xff\xfe{")
    assert not report.ok and report.errors[0].code == cfg.SYNTAX_ERROR


# ---------------------------------------------------------------------------
# Reachability vs an independent oracle
# ---------------------------------------------------------------------------


def oracle_reachable(doc: dict) -> set:
    """Straight recursive DFS over the raw document."""
    states = doc["sop"]["states"]
    seen: set = set()

    def visit(name: str) -> None:
        if name in seen or name not in states:
            return
        seen.add(name)
        for target in states[name].get("transitions", []):
            visit(target)

    visit(doc["sop"]["initial_state"])
    return seen


def test_reachability_matches_oracle():
    doc = base_config()
    doc["sop"]["states"]["loop_a"] = {"agents": ["alice"], "transitions": ["loop_b"]}
    doc["sop"]["states"]["loop_b"] = {"agents": ["alice"], "transitions": ["loop_a"]}
    config = parse(doc)
    flagged = {i.path.split(".")[-1] for i in cfg.check_reachability(config)}
    expected = set(doc["sop"]["states"]) - oracle_reachable(doc)
    assert flagged == expected == {"loop_a", "loop_b"}


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_reachability_matches_oracle_random_graphs(data):
    n = data.draw(st.integers(min_value=1, max_value=6))
    names = [f"s{i}" for i in range(n)]
    doc = base_config()
    doc["sop"]["states"] = {}
    for name in names:
        targets = data.draw(st.lists(st.sampled_from(names), max_size=3,
                                     unique=True))
        doc["sop"]["states"][name] = {
            "agents": ["alice"],
            "transitions": targets,
            "terminal": data.draw(st.booleans()),
        }
    doc["sop"]["initial_state"] = names[0]
    config = parse(doc)
    flagged = {i.path.rsplit(".", 1)[-1] for i in cfg.check_reachability(config)}
    assert flagged == set(names) - oracle_reachable(doc)


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------


def test_canonicalize_round_trip():
    config = parse(base_config())
    blob = cfg.canonicalize(config)
    assert cfg.parse_config(blob) == config
    assert cfg.canonicalize(cfg.parse_config(blob)) == blob


def test_canonicalize_ignores_key_order():
    doc = base_config()
    shuffled = dict(reversed(list(doc.items())))
    assert cfg.canonicalize(parse(doc)) == cfg.canonicalize(parse(shuffled))


def test_canonicalize_is_utf8_with_trailing_newline():
    doc = base_config()
    doc["agents"]["alice"]["role"] = "Hôte de l'émission ✓"
    blob = cfg.canonicalize(parse(doc))
    text = blob.decode("utf-8")
    assert text.endswith("\n")
    assert "Hôte" in text  # not ascii-escaped


def test_config_digest_stable():
    a = cfg.config_digest(parse(base_config()))
    b = cfg.config_digest(parse(base_config()))
    assert a == b and len(a) == 64


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_round_trip_random_configs(data):
    agent_names = data.draw(st.lists(
        st.from_regex(r"[a-z][a-z0-9_-]{0,10}", fullmatch=True),
        min_size=1, max_size=3, unique=True))
    state_names = data.draw(st.lists(
        st.from_regex(r"[a-z][a-z0-9_]{0,10}", fullmatch=True),
        min_size=1, max_size=4, unique=True))
    doc: dict = {
        "version": 1,
        "llm": {"provider": "mock", "script": []},
        "agents": {name: {"role": f"Role of {name}",
                          "is_human": data.draw(st.booleans())}
                   for name in agent_names},
        "sop": {"initial_state": state_names[0], "states": {}},
    }
    for name in state_names:
        doc["sop"]["states"][name] = {
            "agents": data.draw(st.lists(st.sampled_from(agent_names),
                                         min_size=1, max_size=2, unique=True)),
            "transitions": data.draw(st.lists(st.sampled_from(state_names),
                                              max_size=2, unique=True)),
            "terminal": data.draw(st.booleans()),
        }
    config = parse(doc)
    assert cfg.parse_config(cfg.canonicalize(config)) == config
