/**
 * Operator console wiring: connect form, per-actuator sliders (commands
 * sent on release), gait trigger buttons, dock/undock controls and session
 * recording download. All physics lives on the server; the client only
 * renders frames and queues commands.
 */

import { TeleopSession } from "./connection.js";
import { Camera, defaultCamera, drawFrame } from "./render.js";
import { Store } from "./store.js";

const BUILTIN_GAITS: Record<string, string> = {
  nudge: "set top_l len 1.7\nwait settle 30\nset top_l len 1.5\nwait settle 30\n",
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function main() {
  const store = new Store();
  const canvas = el<HTMLCanvasElement>("scene");
  const ctx = canvas.getContext("2d")!;
  const cam: Camera = defaultCamera();
  let session: TeleopSession | null = null;

  const banner = el<HTMLDivElement>("banner");
  const sliders = el<HTMLDivElement>("sliders");
  const nodesBox = el<HTMLDivElement>("nodes");

  store.subscribe(() => {
    const s = store.state;
    banner.textContent = s.banner ||
      `${s.status}${s.scenario ? " - " + s.scenario : ""}` +
      (s.recording ? " [recording]" : "");
    banner.className = s.status === "error" ? "banner error" : "banner";
  });

  function rebuildControls() {
    const frame = store.state.frame;
    if (!frame) return;
    if (sliders.childElementCount !== frame.members.length) {
      sliders.innerHTML = "";
      for (const m of frame.members) {
        const row = document.createElement("div");
        row.className = "slider-row";
        const label = document.createElement("span");
        label.textContent = m.id;
        const input = document.createElement("input");
        input.type = "range";
        input.min = "0.2";
        input.max = "2.2";
        input.step = "0.005";
        input.value = String(m.target);
        input.dataset.member = m.id;
        // command on release keeps the log readable and replays compact
        input.addEventListener("change", () => {
          session?.send({
            type: "set_length",
            member: m.id,
            target: Number(input.value),
          });
        });
        const val = document.createElement("code");
        val.textContent = m.length.toFixed(3);
        row.append(label, input, val);
        sliders.append(row);
      }
    } else {
      const codes = sliders.querySelectorAll("code");
      frame.members.forEach((m, i) => {
        codes[i].textContent = m.length.toFixed(3);
      });
    }
    if (nodesBox.childElementCount !== frame.nodes.length) {
      nodesBox.innerHTML = "";
      for (const n of frame.nodes) {
        const b = document.createElement("button");
        b.textContent = n.id;
        b.addEventListener("click", () => {
          store.toggleNode(n.id);
          nodesBox.querySelectorAll("button").forEach((other) => {
            other.classList.toggle(
              "selected",
              store.state.selectedNodes.includes(other.textContent ?? ""));
          });
        });
        nodesBox.append(b);
      }
    }
  }

  function connect() {
    const url = (el<HTMLInputElement>("url")).value;
    store.setStatus("connecting");
    session = new TeleopSession(url, {
      onHello: (h) => store.applyHello(h),
      onFrame: (f) => {
        store.applyFrame(f);
        rebuildControls();
      },
      onError: (e) => {
        if (e.seq === null) store.setStatus("error", e.message);
      },
      onClose: () => store.setStatus("disconnected", "connection closed"),
      onProtocolError: (msg) => store.setStatus("error", msg),
    });
  }

  el<HTMLButtonElement>("connect").addEventListener("click", connect);
  el<HTMLButtonElement>("pause").addEventListener("click",
    () => session?.send({ type: "pause" }));
  el<HTMLButtonElement>("resume").addEventListener("click",
    () => session?.send({ type: "resume" }));
  el<HTMLButtonElement>("reset").addEventListener("click",
    () => session?.send({ type: "reset" }));
  el<HTMLButtonElement>("dock").addEventListener("click", () => {
    const [a, b] = store.state.selectedNodes;
    if (a && b) session?.send({ type: "dock", node_a: a, node_b: b });
  });
  el<HTMLButtonElement>("undock").addEventListener("click", () => {
    const [a] = store.state.selectedNodes;
    if (a) session?.send({ type: "undock", node: a });
  });
  el<HTMLButtonElement>("send-gait").addEventListener("click", () => {
    const box = el<HTMLTextAreaElement>("gait-text");
    const text = box.value.trim() || BUILTIN_GAITS.nudge;
    session?.send({ type: "load_gait", text });
  });
  el<HTMLButtonElement>("record").addEventListener("click", () => {
    if (!session) return;
    session.recording = !session.recording;
    store.setRecording(session.recording);
  });
  el<HTMLButtonElement>("download").addEventListener("click", async () => {
    // the server's recording is authoritative (it knows the applied step)
    const http = (el<HTMLInputElement>("url")).value
      .replace("ws://", "http://").replace("/ws", "/recording");
    const body = await (await fetch(http)).json();
    const blob = new Blob([JSON.stringify(body.recording, null, 2)],
                          { type: "application/json" });
    const a = document.createElement("a");
    a.href = URL.createObjectURL(blob);
    a.download = "session.recording.json";
    a.click();
  });

  canvas.addEventListener("mousemove", (ev) => {
    if (ev.buttons & 1) {
      cam.yaw += ev.movementX * 0.01;
      cam.pitch = Math.min(1.4, Math.max(0.05, cam.pitch + ev.movementY * 0.01));
    }
  });
  canvas.addEventListener("wheel", (ev) => {
    cam.scale = Math.min(600, Math.max(40, cam.scale * (ev.deltaY < 0 ? 1.1 : 0.9)));
    ev.preventDefault();
  });

  function loop() {
    const frame = store.state.frame;
    if (frame) {
      drawFrame(ctx, frame, cam, store.state.selectedMember,
                store.state.selectedNodes);
    }
    requestAnimationFrame(loop);
  }
  loop();
}

main();
