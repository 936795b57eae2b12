/**
 * Canvas renderer: an orthographic 3D projection of the truss state with
 * contact markers, the COM ground projection and the support polygon.
 * Everything drawn comes straight from the latest server frame.
 */

import { StateFrame } from "./protocol.js";

export interface Camera {
  yaw: number;    // radians around +z
  pitch: number;  // radians above the ground plane
  scale: number;  // pixels per meter
  cx: number;     // screen center offset
  cy: number;
}

export function defaultCamera(): Camera {
  return { yaw: -0.7, pitch: 0.5, scale: 140, cx: 0, cy: 40 };
}

export function project(cam: Camera, x: number, y: number, z: number,
                        w: number, h: number): [number, number] {
  const cyaw = Math.cos(cam.yaw);
  const syaw = Math.sin(cam.yaw);
  const rx = x * cyaw - y * syaw;
  const ry = x * syaw + y * cyaw;
  const sp = Math.sin(cam.pitch);
  const cp = Math.cos(cam.pitch);
  const sx = rx;
  const sy = ry * sp - z * cp;
  return [w / 2 + cam.cx + sx * cam.scale, h / 2 + cam.cy + sy * cam.scale];
}

const MODE_COLORS: Record<string, string> = {
  sticking: "#2e7d32",
  sliding: "#ef6c00",
  separated: "#9e9e9e",
};

export function drawFrame(ctx: CanvasRenderingContext2D, frame: StateFrame,
                          cam: Camera, selectedMember: string | null,
                          selectedNodes: string[]) {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  const P = (x: number, y: number, z: number) => project(cam, x, y, z, w, h);

  // ground grid
  ctx.strokeStyle = "#e3e7ea";
  ctx.lineWidth = 1;
  for (let gx = -3; gx <= 3; gx += 0.5) {
    let [x1, y1] = P(gx, -3, 0);
    let [x2, y2] = P(gx, 3, 0);
    ctx.beginPath(); ctx.moveTo(x1, y1); ctx.lineTo(x2, y2); ctx.stroke();
    [x1, y1] = P(-3, gx, 0);
    [x2, y2] = P(3, gx, 0);
    ctx.beginPath(); ctx.moveTo(x1, y1); ctx.lineTo(x2, y2); ctx.stroke();
  }

  // support polygon under the structure
  if (frame.support.length >= 2) {
    ctx.strokeStyle = "#7e57c2";
    ctx.setLineDash([6, 4]);
    ctx.beginPath();
    frame.support.forEach(([sx, sy], i) => {
      const [px, py] = P(sx, sy, 0);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.closePath();
    ctx.stroke();
    ctx.setLineDash([]);
  }

  const nodeById = new Map(frame.nodes.map((n) => [n.id, n]));

  // members, colored by actuator saturation
  for (const m of frame.members) {
    const a = nodeById.get(m.a);
    const b = nodeById.get(m.b);
    if (!a || !b) continue;
    const [x1, y1] = P(a.x, a.y, a.z);
    const [x2, y2] = P(b.x, b.y, b.z);
    ctx.strokeStyle = m.saturated ? "#d32f2f"
      : m.id === selectedMember ? "#1565c0" : "#37474f";
    ctx.lineWidth = m.id === selectedMember ? 4 : 2.5;
    ctx.beginPath(); ctx.moveTo(x1, y1); ctx.lineTo(x2, y2); ctx.stroke();
  }

  // contact markers colored by stick/slip mode
  for (const c of frame.contacts) {
    const [px, py] = P(c.x, c.y, c.z);
    ctx.fillStyle = MODE_COLORS[c.mode] ?? "#9e9e9e";
    ctx.beginPath();
    ctx.arc(px, py, 3 + Math.min(6, c.force / 15), 0, 2 * Math.PI);
    ctx.fill();
  }

  // nodes
  for (const n of frame.nodes) {
    const [px, py] = P(n.x, n.y, n.z);
    const selected = selectedNodes.includes(n.id);
    ctx.fillStyle = selected ? "#1565c0" : "#263238";
    ctx.beginPath();
    ctx.arc(px, py, selected ? 7 : 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#455a64";
    ctx.font = "11px sans-serif";
    ctx.fillText(n.id, px + 8, py - 4);
  }

  // COM ground projection; warn when it leaves the support polygon
  const [comx, comy] = [frame.com[0], frame.com[1]];
  const inside = pointInPolygon(comx, comy, frame.support);
  const [px, py] = P(comx, comy, 0);
  ctx.strokeStyle = inside ? "#7e57c2" : "#d32f2f";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(px, py, 6, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.beginPath(); ctx.moveTo(px - 9, py); ctx.lineTo(px + 9, py); ctx.stroke();
  ctx.beginPath(); ctx.moveTo(px, py - 9); ctx.lineTo(px, py + 9); ctx.stroke();
  if (!inside && frame.support.length >= 3) {
    ctx.fillStyle = "#d32f2f";
    ctx.font = "bold 13px sans-serif";
    ctx.fillText("TIP RISK: center of mass outside support", 14, 22);
  }
}

export function pointInPolygon(x: number, y: number,
                               poly: [number, number][]): boolean {
  if (poly.length < 3) return true;
  const hull = convexHull(poly);
  let inside = false;
  for (let i = 0, j = hull.length - 1; i < hull.length; j = i++) {
    const [xi, yi] = hull[i];
    const [xj, yj] = hull[j];
    if ((yi > y) !== (yj > y)
        && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
  }
  return inside;
}

export function convexHull(points: [number, number][]): [number, number][] {
  const pts = [...new Map(points.map((p) => [`${p[0]},${p[1]}`, p])).values()]
    .sort((a, b) => (a[0] - b[0]) || (a[1] - b[1]));
  if (pts.length <= 2) return pts;
  const cross = (o: number[], a: number[], b: number[]) =>
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  const lower: [number, number][] = [];
  for (const p of pts) {
    while (lower.length >= 2
           && cross(lower[lower.length - 2], lower[lower.length - 1], p) <= 0) {
      lower.pop();
    }
    lower.push(p);
  }
  const upper: [number, number][] = [];
  for (const p of [...pts].reverse()) {
    while (upper.length >= 2
           && cross(upper[upper.length - 2], upper[upper.length - 1], p) <= 0) {
      upper.pop();
    }
    upper.push(p);
  }
  return [...lower.slice(0, -1), ...upper.slice(0, -1)];
}
