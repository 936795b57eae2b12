import assert from "node:assert/strict";
import { test } from "node:test";

import { encodeCommand, parseServerFrame } from "../src/protocol.js";
import { TeleopSession, WebSocketish } from "../src/connection.js";
import { Store } from "../src/store.js";
import { convexHull, pointInPolygon, project, defaultCamera } from "../src/render.js";

test("parseServerFrame accepts known frames and rejects others", () => {
  const ack = parseServerFrame('{"v":1,"type":"ack","seq":3}');
  assert.equal(ack.type, "ack");
  assert.throws(() => parseServerFrame('{"v":2,"type":"ack","seq":1}'),
                /version mismatch/);
  assert.throws(() => parseServerFrame('{"v":1,"type":"warp"}'),
                /unknown server frame/);
});

test("encodeCommand stamps version and seq", () => {
  const raw = encodeCommand({ type: "set_length", member: "m1", target: 1.5 }, 9);
  const msg = JSON.parse(raw);
  assert.equal(msg.v, 1);
  assert.equal(msg.seq, 9);
  assert.equal(msg.member, "m1");
});

class FakeSocket implements WebSocketish {
  sent: string[] = [];
  listeners = new Map<string, ((ev: any) => void)[]>();
  send(data: string) { this.sent.push(data); }
  close() {}
  addEventListener(kind: string, fn: (ev: any) => void) {
    const fns = this.listeners.get(kind) ?? [];
    fns.push(fn);
    this.listeners.set(kind, fns);
  }
  push(data: string) {
    for (const fn of this.listeners.get("message") ?? []) fn({ data });
  }
}

test("session tracks seq monotonically and resolves acks", async () => {
  const fake = new FakeSocket();
  const session = new TeleopSession("ws://x", {}, () => fake);
  const p1 = session.send({ type: "pause" });
  const p2 = session.send({ type: "resume" });
  const seqs = fake.sent.map((s) => JSON.parse(s).seq);
  assert.deepEqual(seqs, [1, 2]);
  fake.push('{"v":1,"type":"ack","seq":1}');
  fake.push('{"v":1,"type":"error","seq":2,"message":"nope"}');
  assert.equal(await p1, true);
  assert.equal(await p2, false);
  assert.equal(session.pendingCount(), 0);
});

test("session records acknowledged commands only while recording", async () => {
  const fake = new FakeSocket();
  const session = new TeleopSession("ws://x", {}, () => fake);
  session.recording = true;
  const p = session.send({ type: "set_length", member: "m1", target: 1.2 });
  fake.push('{"v":1,"type":"ack","seq":1}');
  await p;
  assert.equal(session.commandLog.length, 1);
  session.recording = false;
  const q = session.send({ type: "pause" });
  fake.push('{"v":1,"type":"ack","seq":2}');
  await q;
  assert.equal(session.commandLog.length, 1);
});

test("store applies whole frames and tracks selection", () => {
  const store = new Store();
  let notified = 0;
  store.subscribe(() => { notified += 1; });
  store.applyFrame({
    v: 1, type: "state_frame", time: 0.5, step: 250, paused: false,
    nodes: [{ id: "a", x: 0, y: 0, z: 0 }], members: [], contacts: [],
    com: [0, 0, 0], support: [],
  });
  assert.equal(store.state.framesSeen, 1);
  store.toggleNode("a");
  store.toggleNode("b");
  store.toggleNode("c");
  assert.deepEqual(store.state.selectedNodes, ["b", "c"]);
  assert.ok(notified >= 4);
});

test("hull and point-in-polygon agree on a square", () => {
  const pts: [number, number][] = [[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]];
  const hull = convexHull(pts);
  assert.equal(hull.length, 4);
  assert.ok(pointInPolygon(0.5, 0.5, pts));
  assert.ok(!pointInPolygon(1.5, 0.5, pts));
});

test("projection is monotone in scale", () => {
  const cam = defaultCamera();
  const [x1] = project(cam, 1, 0, 0, 800, 600);
  cam.scale *= 2;
  const [x2] = project(cam, 1, 0, 0, 800, 600);
  assert.ok(Math.abs(x2 - 400) > Math.abs(x1 - 400));
});
