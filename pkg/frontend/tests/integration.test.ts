/**
 * Protocol conformance against a real local server: a scripted operator
 * session must get a matching ack for every command, sustain >= 20 state
 * frames per second, and its recorded session must replay through the
 * engine bitwise.
 */

import assert from "node:assert/strict";
import { after, before, test } from "node:test";
import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";

import { TeleopSession } from "../src/connection.js";

const PORT = 8841;
const URL = `ws://127.0.0.1:${PORT}/ws`;
let server: ChildProcess;

function wsFactory(url: string) {
  const sock = new WebSocket(url);
  return {
    send: (d: string) => sock.send(d),
    close: () => sock.close(),
    addEventListener: (kind: string, fn: (ev: any) => void) => {
      if (kind === "message") sock.on("message", (d) => fn({ data: String(d) }));
      if (kind === "close") sock.on("close", () => fn({}));
    },
  };
}

async function fetchText(path: string): Promise<string> {
  const res = await fetch(`http://127.0.0.1:${PORT}${path}`);
  return await res.text();
}

before(async () => {
  server = spawn("python3", ["-m", "trussforge.cli", "serve",
                             "--scenario", "pit_octahedron",
                             "--port", String(PORT)],
                 { stdio: ["ignore", "pipe", "pipe"] });
  // wait for readiness over plain HTTP so the operator slot stays free
  for (let i = 0; i < 50; i++) {
    try {
      const res = await fetch(`http://127.0.0.1:${PORT}/trajectory`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error("server did not come up");
});

after(() => {
  server.kill("SIGKILL");
});

test("scripted session: acks, frame rate, bitwise replay", async () => {
  const session = new TeleopSession(URL, {
    onError: (e) => console.error("server error frame:", e.seq, e.message),
  }, wsFactory);
  await new Promise((r) => setTimeout(r, 300));
  assert.ok(session.hello, "hello frame received");
  assert.equal(session.hello!.operator, true);

  const okSet = await session.send(
    { type: "set_length", member: "core_ab", target: 0.97 });
  assert.equal(okSet, true);
  const okDock = await session.send(
    { type: "dock", node_a: "t1_m", node_b: "core_c" });
  assert.equal(okDock, true);
  const okPause = await session.send({ type: "pause" });
  assert.equal(okPause, true);
  const okResume = await session.send({ type: "resume" });
  assert.equal(okResume, true);
  assert.equal(session.pendingCount(), 0);

  // frame rate: count frames over one second of streaming
  const before = session.frameCount;
  await new Promise((r) => setTimeout(r, 1000));
  const fps = session.frameCount - before;
  assert.ok(fps >= 20, `expected >= 20 frames/s, saw ${fps}`);

  // observers may connect but not command
  const observer = new TeleopSession(URL, {}, wsFactory);
  await new Promise((r) => setTimeout(r, 300));
  assert.equal(observer.hello!.operator, false);
  const denied = await observer.send({ type: "pause" });
  assert.equal(denied, false);
  observer.close();

  // freeze the run, then replay the authoritative recording bitwise
  await session.send({ type: "pause" });
  await new Promise((r) => setTimeout(r, 200));
  const meta = JSON.parse(await fetchText("/recording"));
  const liveCsv = await fetchText("/trajectory");
  session.close();

  const dir = mkdtempSync(join(tmpdir(), "tf-ui-"));
  const recPath = join(dir, "rec.json");
  writeFileSync(recPath, JSON.stringify(meta.recording));
  const lastStep = meta.recording.commands.length
    ? meta.recording.commands[meta.recording.commands.length - 1].step : 0;
  const extra = meta.final_step - lastStep;
  const run = spawnSync("python3", ["-m", "trussforge.cli", "replay", recPath,
                                    "--out", dir, "--extra-steps", String(extra)]);
  assert.equal(run.status, 0, String(run.stderr));
  const replayed = readFileSync(join(dir, "replay.trajectory.csv"), "utf-8");
  const liveLines = liveCsv.trimEnd().split("\n");
  const replayLines = replayed.trimEnd().split("\n");
  const n = Math.min(liveLines.length, replayLines.length);
  assert.deepEqual(replayLines.slice(0, n), liveLines.slice(0, n));
  assert.ok(n > 20, "replay produced a meaningful trajectory");
});
