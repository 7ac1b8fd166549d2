"""Live session service over a single bidirectional websocket per client.

Protocol (one JSON object per message):

client -> server
    {"kind": "SessionInit", "layout": {...} | "layout_path": "...",
     "prefs": {...}, "fixation": {...}, "classifier": {...},
     "gaze_format": "pixel"|"ray", "screen": {...}}
    {"kind": "GazeSample", "t": ms, "x": px, "y": px, "valid": bool}
    {"kind": "GazeSample", "t": ms, "ox","oy","oz","dx","dy","dz", "valid"}
    {"kind": "AssistOverride", "anchor_kind": "word"|"paragraph",
     "anchor_id": int, "mode": "definition"|"translation",
     "target_language": "de"}
    {"kind": "EndSession"}

server -> client
    event envelopes {"seq", "t", "payload": {...}} exactly as written to
    replay logs, plus control messages outside the envelope sequence:
    {"kind": "SessionReady", ...}, {"kind": "Heartbeat"},
    {"kind": "ProtocolError", "message"} (followed by connection close).

Sessions are isolated: each connection owns its pipeline, layout, and
classifier state. The same gaze content produces the same envelope
payload sequence as replay mode.
"""

from __future__ import annotations

import asyncio
import json
import os
import threading
from dataclasses import replace
from typing import Any, Dict, Optional

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .classifier import PARAGRAPH_COMPREHENSION, UNFAMILIAR_WORD, DifficultyEvent
from .gaze import GazeSample, parse_pixel_record, parse_ray_record
from .geometry import gaze_to_pixel, PixelPoint
from .layout import parse_layout
from .session import (
    ConfigError,
    SessionConfig,
    SessionPipeline,
    _screen_from_dict,
    load_layout_file,
)


class ProtocolViolation(ValueError):
    pass


class _LiveSession:
    """Per-connection state: one layout, one pipeline, one log."""

    def __init__(self, base_cfg: SessionConfig, init: Dict[str, Any], session_id: int):
        self.session_id = session_id
        if "layout" in init and init["layout"] is not None:
            layout_doc = json.dumps(init["layout"])
            self.layout = parse_layout(layout_doc)
        elif init.get("layout_path"):
            self.layout = load_layout_file(init["layout_path"])
        else:
            self.layout = load_layout_file(base_cfg.layout_path)
        cfg = base_cfg
        try:
            if init.get("prefs"):
                cfg = replace(cfg, prefs=type(cfg.prefs)(**init["prefs"]))
            if init.get("fixation"):
                cfg = replace(cfg, fixation=type(cfg.fixation)(**init["fixation"]))
            if init.get("classifier"):
                cfg = replace(cfg, classifier=type(cfg.classifier)(**init["classifier"]))
        except (TypeError, ValueError) as e:
            raise ProtocolViolation(f"bad SessionInit override: {e}") from e
        self.gaze_format = init.get("gaze_format", "pixel")
        if self.gaze_format not in ("pixel", "ray"):
            raise ProtocolViolation(f"unknown gaze_format {self.gaze_format!r}")
        self.screen = _screen_from_dict(init["screen"]) if init.get("screen") else cfg.screen
        if self.gaze_format == "ray" and self.screen is None:
            raise ProtocolViolation("ray-format gaze requires a screen pose")
        self.cfg = cfg
        self.pipeline = SessionPipeline(self.layout, cfg)
        self._log_fh = None
        if cfg.serve.log_dir:
            os.makedirs(cfg.serve.log_dir, exist_ok=True)
            path = os.path.join(cfg.serve.log_dir, f"session_{session_id}.jsonl")
            self._log_fh = open(path, "w", encoding="utf-8")

    def to_sample(self, msg: Dict[str, Any]) -> GazeSample:
        try:
            if self.gaze_format == "pixel":
                return parse_pixel_record(msg)
            t, ray, valid = parse_ray_record(msg)
            px = gaze_to_pixel(ray, self.screen, self.layout.dims) if (valid and ray) else None
            if px is None:
                return GazeSample(t, PixelPoint(0.0, 0.0), valid=False)
            return GazeSample(t, px, valid=True)
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolViolation(f"bad GazeSample: {e}") from e

    def override_event(self, msg: Dict[str, Any]) -> DifficultyEvent:
        try:
            anchor_kind = msg["anchor_kind"]
            anchor_id = int(msg["anchor_id"])
        except (KeyError, TypeError, ValueError) as e:
            raise ProtocolViolation(f"bad AssistOverride: {e}") from e
        if anchor_kind == "word":
            if not 0 <= anchor_id < self.layout.n_words:
                raise ProtocolViolation(f"unknown word anchor {anchor_id}")
            kind = UNFAMILIAR_WORD
            evidence = {"observed_ms": 0.0, "baseline_ms": 0.0, "ratio": 0.0}
        elif anchor_kind == "paragraph":
            if not 0 <= anchor_id < len(self.layout.paragraphs):
                raise ProtocolViolation(f"unknown paragraph anchor {anchor_id}")
            kind = PARAGRAPH_COMPREHENSION
            evidence = {"regression_count": 0.0, "window_ms": 0.0}
        else:
            raise ProtocolViolation(f"unknown anchor_kind {anchor_kind!r}")
        t = self.pipeline._last_t
        return DifficultyEvent(kind=kind, anchor_id=anchor_id, t=t,
                               evidence=evidence, confidence=0.0)

    def override_prefs(self, msg: Dict[str, Any]):
        changes: Dict[str, Any] = {}
        if msg.get("mode"):
            changes["assistance_mode"] = msg["mode"]
        if msg.get("target_language"):
            changes["target_language"] = msg["target_language"]
        if not changes:
            return self.cfg.prefs
        try:
            return replace(self.cfg.prefs, **changes)
        except ValueError as e:
            raise ProtocolViolation(f"bad AssistOverride prefs: {e}") from e

    def log_envelopes(self, envelopes) -> None:
        if self._log_fh is None:
            return
        for env in envelopes:
            self._log_fh.write(env.to_json())
            self._log_fh.write("\n")
        self._log_fh.flush()

    def close(self):
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None


async def _send_json(ws, obj: Dict[str, Any]) -> None:
    await ws.send(json.dumps(obj, sort_keys=True, separators=(",", ":")))


async def _send_envelopes(ws, session: _LiveSession, envelopes) -> None:
    session.log_envelopes(envelopes)
    for env in envelopes:
        await ws.send(env.to_json())


class SaraServer:
    """Owns the listening socket and hands each connection a session."""

    def __init__(self, cfg: SessionConfig, host: str = "127.0.0.1", port: int = 8765):
        self.cfg = cfg
        self.host = host
        self.port = port
        self.bound_port: Optional[int] = None
        self._session_counter = 0
        self._stop: Optional[asyncio.Future] = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None

    async def _heartbeat(self, ws):
        interval = self.cfg.serve.heartbeat_s
        try:
            while True:
                await asyncio.sleep(interval)
                await _send_json(ws, {"kind": "Heartbeat"})
        except (ConnectionClosed, asyncio.CancelledError):
            return

    async def _handle(self, ws):
        session: Optional[_LiveSession] = None
        beat = asyncio.ensure_future(self._heartbeat(ws))
        try:
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                    if not isinstance(msg, dict) or "kind" not in msg:
                        raise ProtocolViolation("message must be an object with a 'kind'")
                except json.JSONDecodeError as e:
                    raise ProtocolViolation(f"invalid JSON: {e.msg}") from e

                kind = msg["kind"]
                if session is None:
                    if kind != "SessionInit":
                        raise ProtocolViolation("first message must be SessionInit")
                    self._session_counter += 1
                    session = _LiveSession(self.cfg, msg, self._session_counter)
                    await _send_json(ws, {
                        "kind": "SessionReady",
                        "session_id": session.session_id,
                        "n_words": session.layout.n_words,
                    })
                elif kind == "GazeSample":
                    sample = session.to_sample(msg)
                    envs = await asyncio.to_thread(session.pipeline.feed_sample, sample)
                    await _send_envelopes(ws, session, envs)
                elif kind == "AssistOverride":
                    event = session.override_event(msg)
                    prefs = session.override_prefs(msg)
                    envs = await asyncio.to_thread(
                        session.pipeline.dispatch_assist, event, prefs
                    )
                    await _send_envelopes(ws, session, envs)
                elif kind == "EndSession":
                    envs = await asyncio.to_thread(session.pipeline.finish)
                    await _send_envelopes(ws, session, envs)
                    await ws.close(1000, "session ended")
                    break
                elif kind == "SessionInit":
                    raise ProtocolViolation("session already initialized")
                else:
                    raise ProtocolViolation(f"unknown message kind {kind!r}")
        except ProtocolViolation as e:
            try:
                await _send_json(ws, {"kind": "ProtocolError", "message": str(e)})
                await ws.close(1002, "protocol error")
            except ConnectionClosed:
                pass
        except ConnectionClosed:
            pass
        finally:
            beat.cancel()
            if session is not None:
                session.close()

    async def run(self, ready: Optional[threading.Event] = None) -> None:
        self._loop = asyncio.get_running_loop()
        self._stop = self._loop.create_future()
        async with ws_serve(self._handle, self.host, self.port) as server:
            self.bound_port = server.sockets[0].getsockname()[1]
            if ready is not None:
                ready.set()
            await self._stop

    def stop(self) -> None:
        """Thread-safe shutdown request."""
        if self._loop and self._stop and not self._stop.done():
            self._loop.call_soon_threadsafe(self._stop.set_result, None)


def run_serve(cfg: SessionConfig, host: str = "127.0.0.1", port: int = 8765) -> None:
    """Blocking entry point used by the CLI."""
    if cfg.gaze.mode != "live":
        raise ConfigError("serve requires gaze.mode 'live'")
    server = SaraServer(cfg, host, port)

    async def main():
        await server.run()

    asyncio.run(main())


class ServerThread:
    """Run a SaraServer on a daemon thread; used by tests and scripts."""

    def __init__(self, cfg: SessionConfig, host: str = "127.0.0.1", port: int = 0):
        self.server = SaraServer(cfg, host, port)
        self._ready = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _run(self):
        asyncio.run(self.server.run(ready=self._ready))

    def __enter__(self) -> "ServerThread":
        self._thread.start()
        if not self._ready.wait(timeout=10):
            raise RuntimeError("server did not start within 10 s")
        return self

    @property
    def url(self) -> str:
        return f"ws://{self.server.host}:{self.server.bound_port}"

    def __exit__(self, *exc):
        self.server.stop()
        self._thread.join(timeout=10)
