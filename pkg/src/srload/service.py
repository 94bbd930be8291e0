"""Console service: session management over HTTP plus a WebSocket stream.

Transport: one bidirectional WebSocket per session carrying newline-
terminated JSON messages (one message per frame), versioned with
``proto_version``.  Message kinds:

  server -> client
    {"type": "hello", "proto_version": 1, "session_id": ..., "sim_time": ...,
     "time_scale": ..., "bin_s": ..., "snapshot": {...}, "cursor": N}
    {"type": "events", "proto_version": 1, "cursor_start": N,
     "events": [{"seq": ..., "t": ..., "kind": ..., ...}, ...]}
    {"type": "ack", "proto_version": 1, "req_id": ..., "ok": true,
     "applied": {...}}           (or "ok": false, "error": "...")

  client -> server
    {"type": "command", "req_id": ..., "cmd": "set_shutter",
     "args": {...}, "at_sim_time": optional}

A session is created (idempotently, keyed by ``session_key``) with
POST /api/sessions; POST /api/validate checks a configuration without
side effects.  The simulation advances in wall time scaled by the session's
time_scale; all physics remains a function of sim time, so recorded command
scripts replay bit-identically through the engine API.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import ConfigError, SimConfig, load_config
from .engine import PROTO_VERSION, SessionEngine

__all__ = ["create_app", "Session", "SessionRegistry"]

ADVANCE_INTERVAL = 0.005  # wall seconds between advancer wakeups


@dataclass
class Session:
    session_id: str
    engine: SessionEngine
    lock: threading.Lock = field(default_factory=threading.Lock)
    created_wall: float = field(default_factory=time.monotonic)
    last_wall: float = field(default_factory=time.monotonic)

    def advance_wall(self) -> None:
        """Advance sim time by elapsed wall time times the time scale."""
        now = time.monotonic()
        with self.lock:
            dt_wall = now - self.last_wall
            self.last_wall = now
            target = self.engine.sim_time + dt_wall * self.engine.time_scale
            self.engine.advance_to(target)

    def apply(self, name: str, args: dict | None, at_sim_time: float | None) -> dict:
        with self.lock:
            return self.engine.apply_command(name, args, at_sim_time)

    def events_since(self, cursor: int):
        with self.lock:
            return self.engine.stream(cursor)

    def snapshot(self) -> dict:
        with self.lock:
            return self.engine.snapshot()


class SessionRegistry:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._by_key: dict[str, str] = {}
        self._lock = threading.Lock()

    def create(self, config: SimConfig, seed: int | None,
               session_key: str | None, time_scale: float) -> tuple[Session, bool]:
        with self._lock:
            if session_key is not None and session_key in self._by_key:
                return self._sessions[self._by_key[session_key]], False
            session_id = uuid.uuid4().hex[:12]
            engine = SessionEngine(config, seed)
            engine.time_scale = time_scale
            session = Session(session_id, engine)
            self._sessions[session_id] = session
            if session_key is not None:
                self._by_key[session_key] = session_id
            return session, True

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")


class CreateSessionRequest(BaseModel):
    seed: int | None = None
    session_key: str | None = None
    time_scale: float = 1.0
    config_yaml: str | None = None


class ValidateRequest(BaseModel):
    config_yaml: str


def create_app(config: SimConfig | None = None,
               frontend_dir: str | None = None) -> FastAPI:
    base_config = config or load_config()
    base_config.engine_rate_model()  # prewarm the shared transit table
    registry = SessionRegistry()
    app = FastAPI(title="ion loading console service")
    app.state.registry = registry

    @app.post("/api/sessions")
    def create_session(req: CreateSessionRequest) -> dict:
        cfg = base_config
        if req.config_yaml is not None:
            try:
                cfg = load_config(text=req.config_yaml)
            except ConfigError as exc:
                raise HTTPException(status_code=422, detail=str(exc))
        if not 0.01 <= req.time_scale <= 1000:
            raise HTTPException(status_code=422, detail="time_scale must be in [0.01, 1000]")
        session, created = registry.create(cfg, req.seed, req.session_key, req.time_scale)
        return {"proto_version": PROTO_VERSION, "session_id": session.session_id,
                "created": created, "seed": session.engine.seed,
                "time_scale": session.engine.time_scale}

    @app.post("/api/validate")
    def validate(req: ValidateRequest) -> dict:
        try:
            load_config(text=req.config_yaml)
        except ConfigError as exc:
            return {"valid": False, "errors": [str(exc)]}
        return {"valid": True, "errors": []}

    @app.get("/api/sessions/{session_id}")
    def session_state(session_id: str) -> dict:
        session = registry.get(session_id)
        session.advance_wall()
        return {"proto_version": PROTO_VERSION, "session_id": session_id,
                **session.snapshot()}

    @app.websocket("/api/sessions/{session_id}/stream")
    async def stream(ws: WebSocket, session_id: str, cursor: int = 0):
        try:
            session = registry.get(session_id)
        except HTTPException:
            await ws.close(code=4404)
            return
        await ws.accept()
        session.last_wall = time.monotonic()

        async def send(obj: dict) -> None:
            await ws.send_text(json.dumps(obj) + "\n")

        events, cur = session.events_since(cursor)
        await send({"type": "hello", "proto_version": PROTO_VERSION,
                    "session_id": session_id, "sim_time": session.engine.sim_time,
                    "time_scale": session.engine.time_scale,
                    "bin_s": session.engine.cfg.fluorescence_bin_s,
                    "snapshot": session.snapshot(), "cursor": cur})
        if events:
            await send({"type": "events", "proto_version": PROTO_VERSION,
                        "cursor_start": cursor,
                        "events": [e.to_wire() for e in events]})

        async def pump() -> None:
            nonlocal cur
            while True:
                await asyncio.sleep(ADVANCE_INTERVAL)
                await asyncio.to_thread(session.advance_wall)
                events, new_cur = session.events_since(cur)
                if events:
                    await send({"type": "events", "proto_version": PROTO_VERSION,
                                "cursor_start": cur,
                                "events": [e.to_wire() for e in events]})
                    cur = new_cur

        pump_task = asyncio.create_task(pump())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await send({"type": "ack", "proto_version": PROTO_VERSION,
                                "req_id": None, "ok": False, "error": "invalid JSON"})
                    continue
                if msg.get("type") != "command":
                    await send({"type": "ack", "proto_version": PROTO_VERSION,
                                "req_id": msg.get("req_id"), "ok": False,
                                "error": f"unknown message type {msg.get('type')!r}"})
                    continue
                try:
                    applied = await asyncio.to_thread(
                        session.apply, msg.get("cmd"), msg.get("args"),
                        msg.get("at_sim_time"))
                    await send({"type": "ack", "proto_version": PROTO_VERSION,
                                "req_id": msg.get("req_id"), "ok": True,
                                "applied": applied,
                                "state": session.snapshot()})
                except ValueError as exc:
                    await send({"type": "ack", "proto_version": PROTO_VERSION,
                                "req_id": msg.get("req_id"), "ok": False,
                                "error": str(exc)})
        except WebSocketDisconnect:
            pass
        finally:
            pump_task.cancel()

    if frontend_dir:
        front = Path(frontend_dir)
        if front.is_dir():
            index_path = front / "index.html"

            @app.get("/")
            def index() -> FileResponse:
                return FileResponse(index_path)

            app.mount("/static", StaticFiles(directory=front), name="static")

    return app


def main(argv: list[str] | None = None) -> int:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(description="Run the loading console service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--config", default=None)
    parser.add_argument("--frontend", default=None,
                        help="directory with the built operator console")
    args = parser.parse_args(argv)
    cfg = load_config(args.config)
    app = create_app(cfg, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    import sys

    sys.exit(main())
