"""Record real service traffic into test/fixtures/human-debate-session.json.

Runs the backend on a loopback port, drives one human-gated session through
create -> stream -> stale input -> accepted input -> finish, and saves every
response verbatim (status codes, JSON bodies, raw SSE bytes). The console's
vitest suite replays this file instead of talking to a live server.

Regenerate after any wire-format change:

    python3 scripts/record-fixture.py

Requires the backend package installed in the active environment.
"""

import json
import sys
import tempfile
import threading
import time
from pathlib import Path

import httpx
import uvicorn

from agents.service import create_app

FIXTURE = Path(__file__).resolve().parent.parent / "test" / "fixtures" / \
    "human-debate-session.json"

# Human-gated debate: pro opens (with one echo tool round), con rebuts,
# a human judge delivers the verdict. Four script entries, consumed in order.
CONFIG = {
    "version": 1,
    "llm": {"provider": "mock", "script": [
        {"respond": {"function_call": {
            "name": "echo", "arguments": {"text": "motion noted"}}}},
        {"respond": {"content": "Opening case for the motion."}},
        {"match": "next_state",
         "respond": {"content": "<next_state>argument</next_state>"}},
        {"respond": {"content": "Counterpoint against the motion."}},
    ]},
    "agents": {
        "pro": {"role": "Argues for the motion."},
        "con": {"role": "Argues against the motion."},
        "judge": {"role": "Human judge with the final word.",
                  "is_human": True},
    },
    "sop": {
        "initial_state": "opening",
        "states": {
            "opening": {
                "agents": ["pro"],
                "transitions": ["argument"],
                "components": {"pro": [
                    {"kind": "tool", "name": "echo",
                     "mode": "function_call"},
                ]},
            },
            "argument": {"agents": ["con"], "transitions": ["verdict"],
                         "max_turns": 1},
            "verdict": {"agents": ["judge"], "terminal": True,
                        "max_turns": 1},
        },
    },
}

BROKEN_CONFIG = {
    "version": 1,
    "llm": {"provider": "mock", "script": []},
    "agents": {"solo": {"role": "Talks."}},
    "sop": {"initial_state": "nowhere",
            "states": {"talk": {"agents": ["solo"], "terminal": True}}},
}


def exchange(response) -> dict:
    return {"status": response.status_code, "body": response.json()}


def stream_until(client, url, kind):
    """Read the SSE stream incrementally, stop after a frame of `kind`.

    Returns (raw_prefix, last_seq) where raw_prefix is the verbatim bytes up
    to and including the wanted frame's terminating blank line.
    """
    buf = ""
    with client.stream("GET", url, timeout=20.0) as resp:
        assert resp.status_code == 200, resp.status_code
        for chunk in resp.iter_raw():
            buf += chunk.decode("utf-8")
            pos = 0
            frames = buf.split("\n\n")
            for frame in frames[:-1]:
                end = pos + len(frame) + 2
                for line in frame.splitlines():
                    if line.startswith("data: "):
                        event = json.loads(line[len("data: "):])
                        if event["kind"] == kind:
                            return buf[:end], event["seq"]
                pos = end
    raise AssertionError(f"stream ended before any {kind} frame")


def main() -> int:
    tmp = tempfile.mkdtemp(prefix="record-fixture-")
    app = create_app(sessions_dir=tmp)
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=0,
                                           log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 5.0
    while not server.started and time.time() < deadline:
        time.sleep(0.02)
    if not server.started:
        print("server did not start", file=sys.stderr)
        return 1
    port = server.servers[0].sockets[0].getsockname()[1]
    base = f"http://127.0.0.1:{port}"

    try:
        with httpx.Client(base_url=base, timeout=10.0) as client:
            record = {"note": "recorded from a live backend by "
                              "scripts/record-fixture.py; do not edit by hand"}
            record["config"] = CONFIG

            created = client.post("/v1/sessions", json={"config": CONFIG})
            record["create"] = exchange(created)
            session_id = created.json()["session_id"]
            events_url = f"/v1/sessions/{session_id}/events"

            # leg 1: follow live until the judge's input request, then drop
            leg1, last_seq = stream_until(client, events_url,
                                          "HumanInputRequested")
            record["stream_leg1"] = leg1
            record["leg1_last_seq"] = last_seq

            record["status_waiting"] = exchange(
                client.get(f"/v1/sessions/{session_id}"))

            record["input_stale"] = exchange(client.post(
                f"/v1/sessions/{session_id}/input",
                json={"request_id": "req-999",
                      "text": "premature verdict"}))
            record["input_accepted"] = exchange(client.post(
                f"/v1/sessions/{session_id}/input",
                json={"request_id": "req-0",
                      "text": "The motion carries."}))

            # leg 2: resume from the next seq; closes itself at the terminal
            leg2 = client.get(events_url,
                              params={"from_seq": last_seq + 1}, timeout=20.0)
            record["stream_leg2"] = leg2.text

            record["input_not_waiting"] = exchange(client.post(
                f"/v1/sessions/{session_id}/input",
                json={"request_id": "req-0", "text": "again"}))
            record["status_final"] = exchange(
                client.get(f"/v1/sessions/{session_id}"))

            # authoritative server log: full replay of the finished session
            record["stream_full"] = client.get(events_url, timeout=20.0).text

            record["create_invalid"] = exchange(client.post(
                "/v1/sessions", json={"config": BROKEN_CONFIG}))
            record["validate_invalid"] = exchange(client.post(
                "/v1/validate", json={"config": BROKEN_CONFIG}))
            record["missing_session"] = exchange(
                client.get("/v1/sessions/no-such-session"))
    finally:
        server.should_exit = True
        thread.join(timeout=5.0)

    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n",
                       encoding="utf-8")
    frames = record["stream_full"].count("\n\n")
    print(f"wrote {FIXTURE} ({frames} frames, final status "
          f"{record['status_final']['body']['status']})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
