"""Command line entry point.

Five commands: ``run`` drives a session in the terminal (human turns read
from stdin), ``validate`` checks a config file, ``new`` generates a config
from a task description, ``serve`` starts the HTTP service, and ``export``
rebuilds a markdown transcript from a saved event log.

Exit codes for ``run``: 0 finished, 2 failed or invalid config,
3 interrupted while waiting. Other commands exit 1 on any failure.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import sys
from pathlib import Path

import click

from . import events as ev
from .config import (LlmProfile, canonicalize, parse_config,
                     parse_llm_profile, validate_document)
from .meta import generate_config
from .runtime import (CallbackProvider, SessionRuntime, render_transcript)
from .service import DEFAULT_PORT, SESSIONS_DIR_ENV, create_app
from .tools import default_registry

log = logging.getLogger(__name__)


def _echo_report(report) -> None:
    for issue in report.errors:
        click.echo(f"error {issue.path}: [{issue.code}] {issue.message}")
    for issue in report.warnings:
        click.echo(f"warning {issue.path}: [{issue.code}] {issue.message}")


def _describe(event: ev.SessionEvent) -> str:
    p = event.payload
    kind = event.kind
    if kind == ev.STATE_ENTERED:
        extra = p["state"]
    elif kind == ev.AGENT_SELECTED:
        extra = f"{p['agent']} @ {p['state']}"
    elif kind == ev.ACTION_EMITTED:
        head = p["content"].splitlines()[0] if p["content"] else ""
        if len(head) > 96:
            head = head[:96] + "..."
        extra = f"{p['agent']}: {head}"
    elif kind == ev.TRANSIT_DECIDED:
        extra = p["decision"]
        if p.get("to_state"):
            extra += f" -> {p['to_state']}"
    elif kind == ev.TOOL_INVOKED:
        extra = f"{p['tool']} ok={p['ok']}"
    elif kind == ev.MEMORY_UPDATED:
        extra = f"{p['agent']} {p['kind']}"
    elif kind == ev.HUMAN_INPUT_REQUESTED:
        extra = f"{p['agent']} ({p['request_id']})"
    elif kind == ev.WARNING:
        extra = f"{p['code']} {p.get('message', '')}".rstrip()
    elif kind == ev.SESSION_FINISHED:
        extra = p.get("reason", "")
    elif kind == ev.SESSION_FAILED:
        extra = f"{p['error']}: {p['message']}"
    else:
        extra = ""
    return f"[{event.seq:>3}] {kind:<20} {extra}".rstrip()


def _read_human_reply(request: dict) -> str:
    # summary first, so the operator sees what the agent saw
    click.echo()
    click.echo(f"--- human turn: {request['agent']} @ {request['state']} ---")
    click.echo(request["summary"])
    return click.prompt("reply")


def _mock_override(config, script_path: Path):
    """Force every profile in the config onto one mock script file."""
    mock = LlmProfile(provider="mock", model="mock",
                      script=str(script_path.resolve()))
    agents = {name: dataclasses.replace(spec, llm=None)
              for name, spec in config.agents.items()}
    return dataclasses.replace(config, llm=mock, agents=agents)


@click.group()
@click.option("--verbose", is_flag=True, help="Log internals to stderr.")
def main(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@main.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path),
              default=Path("runs"), show_default=True,
              help="Root directory for logs, transcripts, and memory.")
@click.option("--mock", "mock_script", type=click.Path(path_type=Path),
              default=None,
              help="Script file that replaces every llm profile with the "
                   "mock provider.")
@click.option("--max-steps", type=int, default=None,
              help="Override the config's step budget.")
def run(config_path: Path, out_dir: Path, mock_script: Path | None,
        max_steps: int | None) -> None:
    """Run a session from a config file and print its events."""
    try:
        source = config_path.read_bytes()
    except OSError as exc:
        click.echo(f"cannot read {config_path}: {exc}")
        sys.exit(2)
    registry = default_registry()
    report = validate_document(source, registry)
    if not report.ok:
        _echo_report(report)
        sys.exit(2)
    _echo_report(report)  # surfaces warnings even when valid
    config = parse_config(source)
    if mock_script is not None:
        config = _mock_override(config, mock_script)
    if max_steps is not None:
        config = dataclasses.replace(
            config, sop=dataclasses.replace(config.sop, max_steps=max_steps))
    runtime = SessionRuntime(
        config, out_root=out_dir, base_dir=config_path.resolve().parent,
        registry=registry, human_input=CallbackProvider(_read_human_reply),
        listener=lambda event: click.echo(_describe(event)))
    try:
        result = runtime.run()
    except KeyboardInterrupt:
        click.echo("interrupted; partial log kept")
        sys.exit(3)
    click.echo(f"session {result.session_id}: {result.status}"
               + (f" ({result.reason})" if result.reason else ""))
    click.echo(f"log: {out_dir / 'sessions' / result.session_id / 'events.ndjson'}")
    click.echo(f"transcript: {out_dir / 'transcripts' / (result.session_id + '.md')}")
    if result.status != "finished":
        sys.exit(2)


@main.command()
@click.argument("config_path", type=click.Path(path_type=Path))
def validate(config_path: Path) -> None:
    """Check a config file and print every error and warning."""
    try:
        source = config_path.read_bytes()
    except OSError as exc:
        click.echo(f"cannot read {config_path}: {exc}")
        sys.exit(1)
    report = validate_document(source, default_registry())
    _echo_report(report)
    if not report.ok:
        sys.exit(1)
    click.echo("ok")


@main.command()
@click.argument("task")
@click.option("--out", "out_path", type=click.Path(path_type=Path),
              default=None, help="Write the config here instead of stdout.")
@click.option("--force", is_flag=True, help="Overwrite an existing file.")
@click.option("--exemplars", "exemplar_dir", type=click.Path(path_type=Path),
              default=None, help="Directory of reference configs.")
@click.option("--model", default=None,
              help="Model name for an openai-compatible provider.")
@click.option("--api-base", default=None,
              help="Provider base URL (with --model).")
@click.option("--mock", "mock_script", type=click.Path(path_type=Path),
              default=None, help="Mock script file instead of a live model.")
def new(task: str, out_path: Path | None, force: bool,
        exemplar_dir: Path | None, model: str | None, api_base: str | None,
        mock_script: Path | None) -> None:
    """Generate a config from a plain-language task description."""
    if out_path is not None and out_path.exists() and not force:
        click.echo(f"{out_path} exists; pass --force to overwrite")
        sys.exit(1)
    if mock_script is not None:
        profile = LlmProfile(provider="mock", model="mock",
                             script=str(mock_script.resolve()))
    elif model is not None:
        raw = {"provider": "openai-compatible", "model": model}
        if api_base:
            raw["api_base"] = api_base
        profile = parse_llm_profile(raw)
    else:
        click.echo("pick a generator: --model NAME or --mock SCRIPT")
        sys.exit(1)
    result = generate_config(task, llm=profile, exemplar_dir=exemplar_dir)
    if result.ok:
        text = canonicalize(result.config).decode("utf-8")
        if out_path is None:
            click.echo(text, nl=False)
        else:
            out_path.write_text(text, encoding="utf-8")
            click.echo(f"wrote {out_path}")
        return
    _echo_report(result.report)
    trace_path = (out_path.with_suffix(".failed.json") if out_path is not None
                  else Path("generation-failed.json"))
    trace_path.write_text(json.dumps({
        "task": task,
        "attempts": result.attempts,
        "errors": [{"path": i.path, "code": i.code, "message": i.message}
                   for i in result.report.errors],
        "stage_outputs": result.stage_outputs,
        "document": result.document,
    }, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    click.echo(f"generation failed after {result.attempts} attempt(s); "
               f"trace: {trace_path}")
    sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=DEFAULT_PORT, show_default=True)
@click.option("--sessions-dir", type=click.Path(path_type=Path), default=None,
              envvar=SESSIONS_DIR_ENV,
              help="Where session logs land (or set the env var "
                   f"{SESSIONS_DIR_ENV}).")
@click.option("--exemplars", "exemplar_dir", type=click.Path(path_type=Path),
              default=None, help="Exemplar directory for /v1/generate.")
def serve(host: str, port: int, sessions_dir: Path | None,
          exemplar_dir: Path | None) -> None:
    """Serve the HTTP API."""
    import uvicorn

    app = create_app(sessions_dir=sessions_dir, exemplar_dir=exemplar_dir)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except (OSError, SystemExit):
        click.echo(f"cannot serve on {host}:{port}")
        sys.exit(1)


@main.command()
@click.argument("session_dir", type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(["md"]), default="md",
              show_default=True)
@click.option("--out", "out_path", type=click.Path(path_type=Path),
              default=None, help="Defaults to transcript.md in SESSION_DIR.")
def export(session_dir: Path, fmt: str, out_path: Path | None) -> None:
    """Rebuild a transcript from a session's saved event log."""
    events_file = session_dir / "events.ndjson"
    if not events_file.is_file():
        click.echo(f"no event log at {events_file}")
        sys.exit(1)
    events = ev.load_events(events_file)
    actions = [e.payload for e in events if e.kind == ev.ACTION_EMITTED]
    target = out_path if out_path is not None else session_dir / "transcript.md"
    target.write_text(render_transcript(actions), encoding="utf-8")
    click.echo(str(target))


if __name__ == "__main__":
    main()
