"""
trussforge.teleop
=================
Teleoperation service: streams simulation state over a WebSocket and
accepts live operator commands.

Wire protocol (length-delimited UTF-8 JSON text frames, ``"v": 1``):

* client -> server: ``{"v":1, "type": <kind>, "seq": <int>, ...}`` with
  kinds ``set_length`` (member, target, rate?), ``dock`` (node_a, node_b),
  ``undock`` (node), ``deactivate`` (member, end), ``pause``, ``resume``,
  ``reset``, ``load_gait`` (text).
* server -> client: ``state_frame``, ``event``, ``ack`` and ``error``
  frames; acks and errors echo the client ``seq``.

Every client message yields exactly one ack or error. Commands are queued
and applied at step boundaries, so frames always show a consistent state.
The simulation runs in its own thread paced against the wall clock
(dropping frames, never commands); network I/O lives on an asyncio loop.

Sessions are recorded as ordered command lists stamped with the simulation
step at which they applied; ``replay`` pushes a recording through a fresh
engine and reproduces the trajectory bitwise.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from dataclasses import dataclass, field
from http import HTTPStatus
from pathlib import Path
from typing import Optional

from .core import TrussforgeError
from .gaitlang import GaitRunner, parse
from .mechanics import Engine, trajectory_rows
from .scenarios import ScenarioSpec, _drape, get_scenario

PROTOCOL_VERSION = 1

COMMAND_TYPES = {"set_length", "dock", "undock", "deactivate",
                 "pause", "resume", "reset", "load_gait"}


class VersionMismatch(TrussforgeError):
    pass


class PortInUse(TrussforgeError):
    pass


# ---------------------------------------------------------------------------
# Recording
# ---------------------------------------------------------------------------

@dataclass
class SessionRecording:
    scenario: str
    commands: list = field(default_factory=list)  # {"step", "seq", "type", ...}
    version: int = PROTOCOL_VERSION

    def to_dict(self) -> dict:
        return {"v": self.version, "scenario": self.scenario,
                "commands": self.commands}

    @staticmethod
    def from_dict(data: dict) -> "SessionRecording":
        if data.get("v") != PROTOCOL_VERSION:
            raise VersionMismatch(f"recording version {data.get('v')!r} unsupported")
        commands = list(data.get("commands", []))
        steps = [c.get("step", -1) for c in commands]
        if any(b < a for a, b in zip(steps, steps[1:])):
            raise VersionMismatch("recording command steps are not ordered")
        return SessionRecording(scenario=data["scenario"], commands=commands)

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @staticmethod
    def load(path: str) -> "SessionRecording":
        with open(path, "r", encoding="utf-8") as fh:
            return SessionRecording.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Simulation session (shared by the live server and replay)
# ---------------------------------------------------------------------------

class SimSession:
    """Engine plus command application and trajectory sampling."""

    def __init__(self, spec: ScenarioSpec, trajectory_stride: int = 25):
        self.spec = spec
        self.stride = trajectory_stride
        self.recording = SessionRecording(scenario=spec.name)
        self.rows: list[str] = []
        self.paused = False
        self.gait_runner: Optional[GaitRunner] = None
        self._build()

    def _build(self):
        env = self.spec.environment()
        topo = self.spec.build_topology()
        if self.spec.drape:
            topo = _drape(topo, env, clearance=self.spec.drop_height,
                          ceilings_by_prefix=self.spec.drape_ceilings(),
                          skip_prefixes=self.spec.drape_skips())
        self.engine = Engine(topo, env, self.spec.params,
                             dock_params=self.spec.dock_params)
        self.rows = []
        self.gait_runner = None
        self._sample()

    def _sample(self):
        if self.engine.step_count % self.stride == 0:
            self.rows.extend(trajectory_rows(self.engine))

    def apply(self, cmd: dict) -> None:
        """Apply one command at the current step boundary. Raises on bad
        commands; the caller converts that into an error frame."""
        kind = cmd["type"]
        eng = self.engine
        if kind == "set_length":
            eng.set_length(cmd["member"], float(cmd["target"]),
                           rate=cmd.get("rate"))
        elif kind == "dock":
            eng.dock(cmd["node_a"], cmd["node_b"])
        elif kind == "undock":
            eng.undock(cmd["node"])
        elif kind == "deactivate":
            eng.deactivate(cmd["member"], cmd["end"])
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "reset":
            self._build()
        elif kind == "load_gait":
            program = parse(cmd["text"])
            self.gait_runner = GaitRunner(program, eng)
        else:
            raise TrussforgeError(f"unknown command type {kind!r}")

    def record(self, cmd: dict, seq: int):
        entry = {"step": self.engine.step_count, "seq": seq}
        entry.update(cmd)
        self.recording.commands.append(entry)

    def step(self):
        if self.paused:
            return
        if self.gait_runner is not None and not self.gait_runner.done:
            self.gait_runner.advance_step()
        else:
            self.engine.step_once()
        self._sample()

    def state_frame(self) -> dict:
        eng = self.engine
        topo = eng.topology
        nodes = [{"id": nid, "x": eng.px[i], "y": eng.py[i], "z": eng.pz[i]}
                 for i, nid in enumerate(eng.node_ids)]
        members = []
        for j, mid in enumerate(eng.member_ids):
            mem = topo.members[mid]
            members.append({
                "id": mid, "a": mem.end_a, "b": mem.end_b,
                "length": eng.current_length(mid),
                "target": eng.target_length(mid),
                "saturated": mid in eng._saturated,
            })
        contacts = [{"owner": rep[0], "x": rep[1], "y": rep[2], "z": rep[3],
                     "force": rep[7], "mode": rep[8]}
                    for rep in eng._contact_report]
        support = [[rep[1], rep[2]] for rep in eng._contact_report
                   if rep[7] > 0 and rep[6] > 0.25]
        com = eng.com_of_component(0)
        return {
            "v": PROTOCOL_VERSION,
            "type": "state_frame",
            "time": eng.time,
            "step": eng.step_count,
            "paused": self.paused,
            "nodes": nodes,
            "members": members,
            "contacts": contacts,
            "com": [com.x, com.y, com.z],
            "support": support,
        }


def replay(recording: SessionRecording,
           spec: Optional[ScenarioSpec] = None,
           extra_steps: int = 0,
           trajectory_stride: int = 25) -> list[str]:
    """Feed a recording into a fresh engine; returns the trajectory rows.

    Identical inputs reproduce the original session bitwise.
    """
    if spec is None:
        spec = get_scenario(recording.scenario)
    session = SimSession(spec, trajectory_stride=trajectory_stride)
    last_step = 0
    for cmd in recording.commands:
        target = int(cmd["step"])
        if target < last_step:
            raise VersionMismatch("recording steps out of order")
        while session.engine.step_count < target:
            session.step()
        payload = {k: v for k, v in cmd.items() if k not in ("step", "seq")}
        session.apply(payload)
        last_step = target
    for _ in range(extra_steps):
        session.step()
    return session.rows


# ---------------------------------------------------------------------------
# Live server
# ---------------------------------------------------------------------------

def _http_response(status, body: bytes, ctype: str):
    from websockets.datastructures import Headers
    from websockets.http11 import Response
    headers = Headers()
    headers["Content-Type"] = ctype
    headers["Content-Length"] = str(len(body))
    headers["Connection"] = "close"
    return Response(int(status), status.phrase, headers, body)


class TeleopServer:
    """WebSocket teleoperation endpoint plus static UI hosting.

    The first connection drives; later ones observe (their commands are
    answered with an error frame). ``/ws`` upgrades to the protocol; any
    other GET serves files from ``ui_dir`` when provided.
    """

    def __init__(self, spec: ScenarioSpec, host: str = "127.0.0.1",
                 port: int = 8732, frame_rate: float = 30.0,
                 realtime_ratio: float = 1.0,
                 ui_dir: Optional[str] = None,
                 trajectory_stride: int = 25):
        self.spec = spec
        self.host = host
        self.port = port
        self.frame_rate = frame_rate
        self.realtime_ratio = realtime_ratio
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self.session = SimSession(spec, trajectory_stride=trajectory_stride)
        self._lock = threading.Lock()
        self._queue: list[tuple[dict, int, object]] = []
        self._acks: list[tuple[object, dict]] = []
        self._latest_frame: str = json.dumps(self.session.state_frame())
        self._stop = threading.Event()
        self._operator = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._sim_thread: Optional[threading.Thread] = None
        self._srv_thread: Optional[threading.Thread] = None
        self.started = threading.Event()
        self.start_error: Optional[BaseException] = None

    # -- simulation thread ---------------------------------------------------

    def _sim_loop(self):
        dt = self.session.engine.params.dt
        wall0 = time.monotonic()
        sim_offset = 0.0
        frame_interval = 1.0 / self.frame_rate
        next_frame = time.monotonic()
        events_seen = 0
        while not self._stop.is_set():
            with self._lock:
                queue, self._queue = self._queue, []
            for cmd, seq, ws in queue:
                try:
                    self.session.record(cmd, seq)
                    self.session.apply(cmd)
                    reply = {"v": PROTOCOL_VERSION, "type": "ack", "seq": seq}
                except (TrussforgeError, KeyError, ValueError) as exc:
                    reply = {"v": PROTOCOL_VERSION, "type": "error", "seq": seq,
                             "message": f"{type(exc).__name__}: {exc}"}
                self._send_to(ws, reply)
                if cmd["type"] == "reset":
                    wall0 = time.monotonic()
                    sim_offset = 0.0
            if not self.session.paused:
                target = (time.monotonic() - wall0) * self.realtime_ratio
                behind = target - (self.session.engine.time - sim_offset)
                steps = min(int(behind / dt), 200)
                for _ in range(max(steps, 0)):
                    self.session.step()
            else:
                wall0 = time.monotonic() - (self.session.engine.time - sim_offset)
            engine_events = self.session.engine.events
            if len(engine_events) > events_seen:
                for ev in engine_events[events_seen:]:
                    self._broadcast(json.dumps({
                        "v": PROTOCOL_VERSION, "type": "event",
                        "time": ev.time, "kind": ev.kind, "data": ev.data,
                    }))
                events_seen = len(engine_events)
            now = time.monotonic()
            if now >= next_frame:
                frame = json.dumps(self.session.state_frame())
                with self._lock:
                    self._latest_frame = frame
                self._broadcast(frame)
                next_frame = now + frame_interval
            time.sleep(0.002)

    # -- websocket side --------------------------------------------------------

    def _send_to(self, ws, payload: dict):
        if self._loop is None or ws is None:
            return
        data = json.dumps(payload)
        asyncio.run_coroutine_threadsafe(self._safe_send(ws, data), self._loop)

    def _broadcast(self, data: str):
        if self._loop is None:
            return
        asyncio.run_coroutine_threadsafe(self._broadcast_async(data), self._loop)

    async def _safe_send(self, ws, data: str):
        try:
            await ws.send(data)
        except Exception:
            pass

    async def _broadcast_async(self, data: str):
        for ws in list(self._clients):
            await self._safe_send(ws, data)

    async def _handler(self, ws):
        self._clients.add(ws)
        operator = False
        if self._operator is None:
            self._operator = ws
            operator = True
        try:
            await ws.send(json.dumps({
                "v": PROTOCOL_VERSION, "type": "hello",
                "scenario": self.spec.name, "operator": operator,
            }))
            await self._safe_send(ws, self._latest_frame)
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except (json.JSONDecodeError, UnicodeDecodeError):
                    await ws.send(json.dumps({
                        "v": PROTOCOL_VERSION, "type": "error", "seq": None,
                        "message": "malformed JSON frame"}))
                    continue
                seq = msg.get("seq")
                kind = msg.get("type")
                if kind not in COMMAND_TYPES:
                    await ws.send(json.dumps({
                        "v": PROTOCOL_VERSION, "type": "error", "seq": seq,
                        "message": f"unknown message type {kind!r}"}))
                    continue
                if ws is not self._operator:
                    await ws.send(json.dumps({
                        "v": PROTOCOL_VERSION, "type": "error", "seq": seq,
                        "message": "observer connections cannot command"}))
                    continue
                with self._lock:
                    self._queue.append((msg, seq, ws))
        finally:
            self._clients.discard(ws)
            if self._operator is ws:
                self._operator = None

    def _http_payload(self, path: str):
        if path == "/recording":
            with self._lock:
                body = json.dumps({
                    "recording": self.session.recording.to_dict(),
                    "final_step": self.session.engine.step_count,
                    "stride": self.session.stride,
                })
            return body.encode(), "application/json"
        if path == "/trajectory":
            with self._lock:
                from .mechanics import TRAJECTORY_HEADER
                body = TRAJECTORY_HEADER + "\n" + "\n".join(self.session.rows) + "\n"
            return body.encode(), "text/csv"
        return None

    async def _process_request(self, connection, request):
        # Serve the UI over plain HTTP; /ws upgrades to the protocol.
        path = request.path.split("?")[0]
        if path == "/ws" or "Upgrade" in request.headers:
            return None
        payload = self._http_payload(path)
        if payload is not None:
            body, ctype = payload
            return _http_response(HTTPStatus.OK, body, ctype)
        if self.ui_dir is None:
            return connection.respond(HTTPStatus.NOT_FOUND, "no UI bundled\n")
        rel = "index.html" if path in ("", "/") else path.lstrip("/")
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            return connection.respond(HTTPStatus.NOT_FOUND, "not found\n")
        body = target.read_bytes()
        ctype = {
            ".html": "text/html", ".js": "text/javascript",
            ".css": "text/css", ".map": "application/json",
        }.get(target.suffix, "application/octet-stream")
        return _http_response(HTTPStatus.OK, body, ctype)

    def _server_main(self):
        import websockets.asyncio.server as ws_server

        async def main():
            self._clients = set()
            try:
                async with ws_server.serve(
                        self._handler, self.host, self.port,
                        process_request=self._process_request):
                    self.started.set()
                    while not self._stop.is_set():
                        await asyncio.sleep(0.05)
            except OSError as exc:
                self.start_error = PortInUse(
                    f"cannot bind {self.host}:{self.port}: {exc}")
                self.started.set()

        self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self._loop)
        try:
            self._loop.run_until_complete(main())
        finally:
            self._loop.close()

    # -- lifecycle ----------------------------------------------------------------

    def start(self):
        self._srv_thread = threading.Thread(target=self._server_main, daemon=True)
        self._srv_thread.start()
        self.started.wait(timeout=10)
        if self.start_error is not None:
            raise self.start_error
        self._sim_thread = threading.Thread(target=self._sim_loop, daemon=True)
        self._sim_thread.start()
        return self

    def stop(self):
        self._stop.set()
        if self._sim_thread is not None:
            self._sim_thread.join(timeout=5)
        if self._srv_thread is not None:
            self._srv_thread.join(timeout=5)

    def serve_forever(self):
        self.start()
        try:
            while True:
                time.sleep(0.5)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()
