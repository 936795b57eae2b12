"""Teleoperation end to end: live server, scripted operator, bitwise replay.

Starts the service on a local port, drives it over the wire protocol,
downloads the authoritative session recording, replays it through a fresh
engine and checks the trajectories agree byte for byte.
"""

import json
import time
import urllib.request

from websockets.sync.client import connect

from trussforge.scenarios import get_scenario
from trussforge.teleop import SessionRecording, TeleopServer, replay

PORT = 8744
server = TeleopServer(get_scenario("pit_tetra"), port=PORT,
                      trajectory_stride=10).start()
print(f"serving pit_tetra on ws://127.0.0.1:{PORT}/ws")

with connect(f"ws://127.0.0.1:{PORT}/ws") as ws:
    hello = json.loads(ws.recv(timeout=5))
    print(f"hello: scenario={hello['scenario']} operator={hello['operator']}")
    for seq, cmd in enumerate([
        {"type": "set_length", "member": "cf", "target": 1.12},
        {"type": "set_length", "member": "cl", "target": 1.12},
        {"type": "set_length", "member": "cr", "target": 1.12},
    ], start=1):
        ws.send(json.dumps({"v": 1, "seq": seq, **cmd}))
    acked = 0
    frames = 0
    t0 = time.time()
    while time.time() - t0 < 2.0:
        msg = json.loads(ws.recv(timeout=5))
        if msg["type"] == "ack":
            acked += 1
        elif msg["type"] == "state_frame":
            frames += 1
    print(f"{acked} acks, {frames} state frames in 2 s")
    ws.send(json.dumps({"v": 1, "seq": 9, "type": "pause"}))

time.sleep(0.3)
meta = json.load(urllib.request.urlopen(f"http://127.0.0.1:{PORT}/recording"))
live_rows = list(server.session.rows)
server.stop()

recording = SessionRecording.from_dict(meta["recording"])
last = recording.commands[-1]["step"] if recording.commands else 0
rows = replay(recording, spec=get_scenario("pit_tetra"),
              extra_steps=meta["final_step"] - last, trajectory_stride=10)
n = min(len(rows), len(live_rows))
print(f"replay reproduces the live trajectory bitwise: "
      f"{rows[:n] == live_rows[:n]} ({n} rows compared)")
