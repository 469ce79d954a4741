"""CLI commands: run, validate, new, export, serve."""

from __future__ import annotations

import json
import socket
from pathlib import Path

import pytest
from click.testing import CliRunner

import agents.cli as cli

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def runner():
    return CliRunner()


def write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path


def echo_doc(script) -> dict:
    return {
        "version": 1,
        "llm": {"provider": "mock", "script": script},
        "agents": {"solo": {"role": "Says one thing."}},
        "sop": {
            "initial_state": "speak",
            "states": {"speak": {"agents": ["solo"], "terminal": True}},
        },
    }


def human_gate_doc() -> dict:
    return {
        "version": 1,
        "llm": {"provider": "mock", "script": [
            {"respond": {"content": "Draft ready."}},
            {"match": "next_state",
             "respond": {"content": "<next_state>gate</next_state>"}},
            {"respond": {"content": "Done."}},
        ]},
        "agents": {
            "writer": {"role": "Drafts."},
            "owner": {"role": "Approves.", "is_human": True},
        },
        "sop": {
            "initial_state": "draft",
            "states": {
                "draft": {"agents": ["writer"], "transitions": ["gate"]},
                "gate": {"agents": ["owner"], "transitions": ["ship"],
                         "max_turns": 1},
                "ship": {"agents": ["writer"], "terminal": True,
                         "max_turns": 1},
            },
        },
    }


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def test_run_finishes_with_exit_0(runner, tmp_path):
    result = runner.invoke(cli.main, [
        "run", str(FIXTURES / "echo_minimal.json"), "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "SessionFinished" in result.output
    assert "terminal_state" in result.output
    session_dirs = list((tmp_path / "sessions").iterdir())
    assert len(session_dirs) == 1
    assert (session_dirs[0] / "events.ndjson").is_file()
    transcripts = list((tmp_path / "transcripts").iterdir())
    assert transcripts[0].read_text().startswith("# Session transcript")


def test_run_invalid_config_exits_2(runner, tmp_path):
    doc = echo_doc([{"respond": {"content": "hi"}}])
    doc["sop"]["initial_state"] = "nowhere"
    path = write_json(tmp_path / "bad.json", doc)
    result = runner.invoke(cli.main, ["run", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "REFERENCE_ERROR" in result.output


def test_run_missing_file_exits_2(runner, tmp_path):
    result = runner.invoke(cli.main, [
        "run", str(tmp_path / "absent.json"), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "cannot read" in result.output


def test_run_failed_session_exits_2(runner, tmp_path):
    path = write_json(tmp_path / "starved.json", echo_doc([]))
    result = runner.invoke(cli.main, ["run", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "SessionFailed" in result.output
    assert "ScriptExhausted" in result.output
    # the partial log still landed on disk
    session_dirs = list((tmp_path / "sessions").iterdir())
    assert (session_dirs[0] / "events.ndjson").is_file()


def test_run_human_turn_reads_stdin(runner, tmp_path):
    path = write_json(tmp_path / "gate.json", human_gate_doc())
    result = runner.invoke(cli.main,
                           ["run", str(path), "--out", str(tmp_path)],
                           input="Approved, go.\n")
    assert result.exit_code == 0, result.output
    assert "human turn: owner @ gate" in result.output
    assert "Draft ready." in result.output  # summary precedes the prompt
    transcript = next((tmp_path / "transcripts").iterdir()).read_text()
    assert "(human)" in transcript
    assert "Approved, go." in transcript


def test_run_interrupt_during_human_wait_exits_3(runner, tmp_path, monkeypatch):
    def interrupt(request):
        raise KeyboardInterrupt
    monkeypatch.setattr(cli, "_read_human_reply", interrupt)
    path = write_json(tmp_path / "gate.json", human_gate_doc())
    result = runner.invoke(cli.main, ["run", str(path), "--out", str(tmp_path)])
    assert result.exit_code == 3
    assert "interrupted" in result.output
    # events up to the request survive
    session_dirs = list((tmp_path / "sessions").iterdir())
    lines = (session_dirs[0] / "events.ndjson").read_text().splitlines()
    assert any('"HumanInputRequested"' in line for line in lines)


def test_run_mock_flag_overrides_live_provider(runner, tmp_path):
    doc = echo_doc([])
    doc["llm"] = {"provider": "openai-compatible", "model": "some-model"}
    config_path = write_json(tmp_path / "live.json", doc)
    script_path = write_json(tmp_path / "script.json", [
        {"respond": {"content": "Offline reply."}},
        {"respond": {"content": "FINISH"}},
    ])
    result = runner.invoke(cli.main, [
        "run", str(config_path), "--out", str(tmp_path),
        "--mock", str(script_path)])
    assert result.exit_code == 0, result.output
    assert "Offline reply." in result.output


def test_run_max_steps_override(runner, tmp_path):
    result = runner.invoke(cli.main, [
        "run", str(FIXTURES / "debate.json"), "--out", str(tmp_path),
        "--max-steps", "1"])
    assert result.exit_code == 0, result.output
    assert "max_steps" in result.output


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def test_validate_ok(runner):
    result = runner.invoke(cli.main,
                           ["validate", str(FIXTURES / "debate.json")])
    assert result.exit_code == 0
    assert "ok" in result.output


def test_validate_invalid(runner, tmp_path):
    doc = echo_doc([{"respond": {"content": "hi"}}])
    doc["agents"]["solo"].pop("role")
    path = write_json(tmp_path / "bad.json", doc)
    result = runner.invoke(cli.main, ["validate", str(path)])
    assert result.exit_code == 1
    assert "SCHEMA_ERROR" in result.output


def test_validate_missing_file(runner, tmp_path):
    result = runner.invoke(cli.main,
                           ["validate", str(tmp_path / "absent.json")])
    assert result.exit_code == 1


# ---------------------------------------------------------------------------
# new
# ---------------------------------------------------------------------------

STAGE1 = json.dumps({"description": "Echo task.",
                     "agents": {"solo": {"role": "Echoes."}}})
STAGE2 = json.dumps({"initial_state": "talk",
                     "states": {"talk": {"agents": ["solo"],
                                         "terminal": True, "max_turns": 1}}})
STAGE3 = json.dumps({"components": {"talk": {"*": [
    {"kind": "prompt", "part": "task", "text": "Say something."}]}}})


def generation_script() -> list:
    return [{"respond": {"content": f"```json\n{s}\n```"}}
            for s in (STAGE1, STAGE2, STAGE3)]


def test_new_writes_valid_config(runner, tmp_path):
    script_path = write_json(tmp_path / "gen.json", generation_script())
    out_path = tmp_path / "generated.json"
    result = runner.invoke(cli.main, [
        "new", "One agent says one thing.",
        "--mock", str(script_path), "--out", str(out_path)])
    assert result.exit_code == 0, result.output
    check = runner.invoke(cli.main, ["validate", str(out_path)])
    assert check.exit_code == 0, check.output


def test_new_stdout_when_no_out(runner, tmp_path):
    script_path = write_json(tmp_path / "gen.json", generation_script())
    result = runner.invoke(cli.main, [
        "new", "One agent says one thing.", "--mock", str(script_path)])
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["sop"]["initial_state"] == "talk"


def test_new_refuses_to_overwrite(runner, tmp_path):
    script_path = write_json(tmp_path / "gen.json", generation_script())
    out_path = tmp_path / "generated.json"
    out_path.write_text("{}")
    result = runner.invoke(cli.main, [
        "new", "task", "--mock", str(script_path), "--out", str(out_path)])
    assert result.exit_code == 1
    assert "exists" in result.output
    forced = runner.invoke(cli.main, [
        "new", "task", "--mock", str(script_path), "--out", str(out_path),
        "--force"])
    assert forced.exit_code == 0, forced.output


def test_new_requires_a_generator(runner):
    result = runner.invoke(cli.main, ["new", "task"])
    assert result.exit_code == 1
    assert "--model" in result.output


def test_new_failure_leaves_trace(runner, tmp_path):
    # three stages and two repair rounds, none yielding a json block
    script_path = write_json(tmp_path / "gen.json", [
        {"respond": {"content": "no block here"}} for _ in range(5)])
    out_path = tmp_path / "generated.json"
    result = runner.invoke(cli.main, [
        "new", "task", "--mock", str(script_path), "--out", str(out_path)])
    assert result.exit_code == 1
    assert not out_path.exists()
    trace_path = tmp_path / "generated.failed.json"
    assert "generated.failed.json" in result.output
    trace = json.loads(trace_path.read_text())
    assert trace["attempts"] == 3
    assert trace["errors"]


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def test_export_matches_runtime_transcript(runner, tmp_path):
    run = runner.invoke(cli.main, [
        "run", str(FIXTURES / "debate.json"), "--out", str(tmp_path)])
    assert run.exit_code == 0, run.output
    session_dir = next((tmp_path / "sessions").iterdir())
    original = next((tmp_path / "transcripts").iterdir()).read_text()
    result = runner.invoke(cli.main, ["export", str(session_dir)])
    assert result.exit_code == 0, result.output
    rebuilt = (session_dir / "transcript.md").read_text()
    assert rebuilt == original


def test_export_empty_log(runner, tmp_path):
    session_dir = tmp_path / "empty"
    session_dir.mkdir()
    (session_dir / "events.ndjson").write_text("")
    result = runner.invoke(cli.main, ["export", str(session_dir)])
    assert result.exit_code == 0
    assert (session_dir / "transcript.md").read_text() == "# Session transcript\n"


def test_export_custom_out(runner, tmp_path):
    run = runner.invoke(cli.main, [
        "run", str(FIXTURES / "echo_minimal.json"), "--out", str(tmp_path)])
    assert run.exit_code == 0
    session_dir = next((tmp_path / "sessions").iterdir())
    target = tmp_path / "elsewhere.md"
    result = runner.invoke(cli.main,
                           ["export", str(session_dir), "--out", str(target)])
    assert result.exit_code == 0
    assert target.is_file()


def test_export_unknown_dir(runner, tmp_path):
    result = runner.invoke(cli.main, ["export", str(tmp_path / "nope")])
    assert result.exit_code == 1
    assert "no event log" in result.output


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def test_serve_port_busy_exits_1(runner):
    blocker = socket.socket()
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        result = runner.invoke(cli.main, ["serve", "--port", str(port)])
        assert result.exit_code == 1
        assert "cannot serve" in result.output
    finally:
        blocker.close()
