"""WebSocket control surface for a running synth engine.

One JSON object per text message, no newlines.  Client messages:

    {"type": "set_latent", "values": [f, ...]}
    {"type": "set_chroma", "class": 0-11 | null}
    {"type": "set_gain", "value": f}
    {"type": "get_status"}

Every accepted update echoes a full status object, and each connection
also receives periodic status broadcasts (default 20 Hz cap) carrying
the state echo, underrun/clip counters, a 64-bin display spectrum, and
the model descriptor the UI builds its sliders from.  Malformed
messages get {"type": "error", "message": ...} and leave state alone.

The HTTP side serves the control panel's static assets at ``/``; the
socket lives at ``/ws``.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .engine import SynthEngine

MAX_STATUS_HZ = 20.0


def status_message(engine: SynthEngine) -> dict:
    return {"type": "status", **engine.status()}


def error_message(text: str) -> dict:
    return {"type": "error", "message": text}


def apply_message(engine: SynthEngine, raw: str) -> dict:
    """Apply one client message; returns the reply to send.

    Successful updates (and get_status) reply with a status echo;
    anything malformed replies with an error and changes nothing.
    """
    try:
        msg = json.loads(raw)
    except json.JSONDecodeError:
        return error_message("message is not valid JSON")
    if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
        return error_message('message must be an object with a "type" field')

    kind = msg["type"]
    try:
        if kind == "set_latent":
            if "values" not in msg:
                return error_message('set_latent requires "values"')
            engine.set_latent(msg["values"])
        elif kind == "set_chroma":
            if "class" not in msg:
                return error_message('set_chroma requires "class"')
            engine.set_chroma(msg["class"])
        elif kind == "set_gain":
            if "value" not in msg:
                return error_message('set_gain requires "value"')
            engine.set_gain(msg["value"])
        elif kind != "get_status":
            return error_message(f"unknown message type {kind!r}")
    except (ValueError, TypeError) as exc:
        return error_message(str(exc))
    return status_message(engine)


def _encode(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"))


_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>timbrelab</title></head>
<body style="font-family:sans-serif;max-width:40em;margin:3em auto">
<h1>timbrelab control endpoint</h1>
<p>The synth engine is running. Connect a control panel to
<code>ws://&lt;host&gt;/ws</code>, or install the browser UI and point
the server at its build directory to have it served here.</p>
<pre id="s" style="background:#eee;padding:1em">waiting for status…</pre>
<script>
const ws = new WebSocket(`ws://${location.host}/ws`);
ws.onmessage = (ev) => {
  document.getElementById("s").textContent = JSON.stringify(JSON.parse(ev.data), null, 2);
};
</script>
</body></html>
"""


def create_control_app(engine: SynthEngine, ui_dir: Optional[str] = None,
                       status_hz: float = MAX_STATUS_HZ) -> FastAPI:
    """FastAPI app exposing the control socket and the static UI.

    ``status_hz`` caps the per-connection broadcast rate and is clamped
    to 20 Hz; tests pass a low value to keep receive order predictable.
    """
    status_hz = min(float(status_hz), MAX_STATUS_HZ)
    if status_hz <= 0:
        raise ValueError(f"status_hz must be positive, got {status_hz}")
    interval = 1.0 / status_hz
    app = FastAPI(title="timbrelab control", docs_url=None, redoc_url=None)
    app.state.engine = engine

    @app.websocket("/ws")
    async def control_socket(websocket: WebSocket):
        await websocket.accept()
        send_lock = asyncio.Lock()

        async def send(payload: dict) -> None:
            async with send_lock:
                await websocket.send_text(_encode(payload))

        async def broadcast() -> None:
            while True:
                await send(status_message(engine))
                await asyncio.sleep(interval)

        ticker = asyncio.create_task(broadcast())
        try:
            while True:
                raw = await websocket.receive_text()
                await send(apply_message(engine, raw))
        except WebSocketDisconnect:
            pass
        finally:
            ticker.cancel()

    if ui_dir is not None:
        if not Path(ui_dir).is_dir():
            raise ValueError(f"UI directory not found: {ui_dir}")
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:
        @app.get("/")
        async def index() -> HTMLResponse:
            return HTMLResponse(_FALLBACK_PAGE)

    return app


def serve_control(engine: SynthEngine, port: int = 8765, host: str = "127.0.0.1",
                  ui_dir: Optional[str] = None) -> None:
    """Run the control server until interrupted (blocking)."""
    import uvicorn

    app = create_control_app(engine, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
