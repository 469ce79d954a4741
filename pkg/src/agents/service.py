"""HTTP service: sessions over REST plus a server-sent-events stream.

``create_app`` builds a FastAPI app around a SessionManager. Each posted
config runs in its own daemon thread with its own gateway (mock scripts
stay isolated per session). The event stream replays the log from
``from_seq`` and then follows live events, closing after the terminal
event, so a client that reconnects with the last seen seq never misses or
duplicates an event.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse, StreamingResponse

from . import config as cfg
from . import events as ev
from .gateway import LlmProfile
from .meta import build_library, generate_config
from .runtime import Mailbox, SessionRuntime, SubmitOutcome
from .tools import default_registry

log = logging.getLogger(__name__)

DEFAULT_PORT = 8910
SESSIONS_DIR_ENV = "AGENTS_SESSIONS_DIR"

STATUS_RUNNING = "running"
STATUS_WAITING = "waiting_input"


class SessionHandle:
    def __init__(self, runtime: SessionRuntime, mailbox: Mailbox):
        self.runtime = runtime
        self.mailbox = mailbox
        self.cond = threading.Condition()
        self.done = False
        self.result = None
        self.thread: threading.Thread | None = None

    @property
    def events(self) -> list:
        return self.runtime.log.events

    @property
    def status(self) -> str:
        if self.done and self.result is not None:
            return self.result.status
        if self.mailbox.outstanding is not None:
            return STATUS_WAITING
        return STATUS_RUNNING

    def notify(self, _event=None) -> None:
        with self.cond:
            self.cond.notify_all()

    def run(self) -> None:
        try:
            self.result = self.runtime.run()
        except BaseException:
            log.exception("session thread crashed")
        finally:
            with self.cond:
                self.done = True
                self.cond.notify_all()


class SessionManager:
    def __init__(self, sessions_dir: Path | None = None,
                 base_dir: Path | None = None):
        self.sessions_dir = sessions_dir
        self.base_dir = base_dir
        self.registry = default_registry()
        self._handles: dict = {}
        self._lock = threading.Lock()

    def create(self, document) -> tuple:
        report = cfg.validate_document(document, self.registry)
        if not report.ok:
            return None, report
        source = document if isinstance(document, (str, bytes)) else \
            json.dumps(document)
        config = cfg.parse_config(source)
        mailbox = Mailbox()
        runtime = SessionRuntime(
            config, out_root=self.sessions_dir, base_dir=self.base_dir,
            registry=self.registry, human_input=mailbox)
        handle = SessionHandle(runtime, mailbox)
        runtime.log.listener = handle.notify
        with self._lock:
            self._handles[runtime.session_id] = handle
        thread = threading.Thread(target=handle.run, daemon=True,
                                  name=f"session-{runtime.session_id[:8]}")
        handle.thread = thread
        thread.start()
        return handle, report

    def get(self, session_id: str) -> SessionHandle | None:
        with self._lock:
            return self._handles.get(session_id)


def _issues(items) -> list:
    return [{"path": i.path, "code": i.code, "message": i.message}
            for i in items]


def _report_body(report: cfg.ValidationReport) -> dict:
    return {"ok": report.ok, "errors": _issues(report.errors),
            "warnings": _issues(report.warnings)}


def _sse_frame(event: ev.SessionEvent) -> str:
    return ("event: session\n"
            f"data: {json.dumps(event.to_dict(), ensure_ascii=False)}\n\n")


def create_app(sessions_dir: str | Path | None = None,
               exemplar_dir: str | Path | None = None,
               base_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="agents service")
    manager = SessionManager(
        sessions_dir=Path(sessions_dir) if sessions_dir else None,
        base_dir=Path(base_dir) if base_dir else None)
    app.state.manager = manager
    app.state.exemplar_dir = Path(exemplar_dir) if exemplar_dir else None

    @app.post("/v1/sessions", status_code=201)
    async def create_session(body: dict):
        document = body.get("config")
        if document is None:
            return JSONResponse(status_code=422, content={
                "ok": False,
                "errors": [{"path": "config", "code": cfg.SCHEMA_ERROR,
                            "message": "request body needs a 'config' object"}],
                "warnings": []})
        handle, report = manager.create(document)
        if handle is None:
            return JSONResponse(status_code=422, content=_report_body(report))
        return {"session_id": handle.runtime.session_id,
                "status": handle.status,
                "warnings": _issues(report.warnings)}

    @app.get("/v1/sessions/{session_id}")
    async def session_status(session_id: str):
        handle = manager.get(session_id)
        if handle is None:
            return JSONResponse(status_code=404,
                                content={"error": "unknown session"})
        events = handle.events
        return {"session_id": session_id,
                "status": handle.status,
                "last_seq": len(events) - 1,
                "waiting": handle.runtime.waiting_request}

    @app.get("/v1/sessions/{session_id}/events")
    def session_events(session_id: str, from_seq: int = 0):
        handle = manager.get(session_id)
        if handle is None:
            return JSONResponse(status_code=404,
                                content={"error": "unknown session"})

        def stream():
            index = max(0, from_seq)
            while True:
                with handle.cond:
                    while index >= len(handle.events) and not handle.done:
                        handle.cond.wait(timeout=1.0)
                    if index >= len(handle.events) and handle.done:
                        return
                while index < len(handle.events):
                    event = handle.events[index]
                    index += 1
                    yield _sse_frame(event)
                    if event.kind in ev.TERMINAL_KINDS:
                        return

        return StreamingResponse(stream(), media_type="text/event-stream",
                                 headers={"cache-control": "no-cache"})

    @app.post("/v1/sessions/{session_id}/input")
    async def session_input(session_id: str, body: dict):
        handle = manager.get(session_id)
        if handle is None:
            return JSONResponse(status_code=404,
                                content={"error": "unknown session"})
        request_id = body.get("request_id", "")
        text = body.get("text", "")
        outcome = handle.mailbox.submit(request_id, text)
        if outcome is SubmitOutcome.ACCEPTED:
            return JSONResponse(status_code=202,
                                content={"outcome": outcome.value})
        return JSONResponse(status_code=409, content={"outcome": outcome.value})

    @app.post("/v1/validate")
    async def validate_config(body: dict):
        document = body.get("config")
        if document is None:
            return JSONResponse(status_code=422, content={
                "ok": False,
                "errors": [{"path": "config", "code": cfg.SCHEMA_ERROR,
                            "message": "request body needs a 'config' object"}],
                "warnings": []})
        report = cfg.validate_document(document, manager.registry)
        return _report_body(report)

    @app.post("/v1/generate")
    async def generate(body: dict):
        task = body.get("task")
        if not isinstance(task, str) or not task.strip():
            return JSONResponse(status_code=422,
                                content={"error": "a non-empty 'task' is required"})
        raw_profile = body.get("llm")
        if raw_profile is None:
            return JSONResponse(status_code=422,
                                content={"error": "an 'llm' profile is required"})
        try:
            profile: LlmProfile = cfg.parse_llm_profile(raw_profile)
        except cfg.ConfigError as exc:
            return JSONResponse(status_code=422,
                                content={"error": str(exc), "path": exc.path})
        result = generate_config(task, llm=profile,
                                 exemplar_dir=app.state.exemplar_dir)
        return {"ok": result.ok,
                "document": result.document,
                "attempts": result.attempts,
                "exemplars_used": result.exemplars_used,
                "errors": _issues(result.report.errors),
                "warnings": _issues(result.report.warnings)}

    return app
