/**
 * Wire protocol types and helpers for the teleoperation channel.
 *
 * Frames are UTF-8 JSON text with a "v": 1 version tag. Every command the
 * client sends carries a strictly increasing seq; the server answers each
 * one with exactly one ack or error echoing that seq.
 */

export const PROTOCOL_VERSION = 1;

export interface NodeState {
  id: string;
  x: number;
  y: number;
  z: number;
}

export interface MemberState {
  id: string;
  a: string;
  b: string;
  length: number;
  target: number;
  saturated: boolean;
}

export interface ContactState {
  owner: string;
  x: number;
  y: number;
  z: number;
  force: number;
  mode: "separated" | "sticking" | "sliding";
}

export interface StateFrame {
  v: number;
  type: "state_frame";
  time: number;
  step: number;
  paused: boolean;
  nodes: NodeState[];
  members: MemberState[];
  contacts: ContactState[];
  com: [number, number, number];
  support: [number, number][];
}

export interface HelloFrame {
  v: number;
  type: "hello";
  scenario: string;
  operator: boolean;
}

export interface AckFrame {
  v: number;
  type: "ack";
  seq: number;
}

export interface ErrorFrame {
  v: number;
  type: "error";
  seq: number | null;
  message: string;
}

export type ServerFrame = StateFrame | HelloFrame | AckFrame | ErrorFrame;

export type Command =
  | { type: "set_length"; member: string; target: number; rate?: number }
  | { type: "dock"; node_a: string; node_b: string }
  | { type: "undock"; node: string }
  | { type: "deactivate"; member: string; end: "a" | "b" }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" }
  | { type: "load_gait"; text: string };

export function parseServerFrame(raw: string): ServerFrame {
  const msg = JSON.parse(raw);
  if (msg.v !== PROTOCOL_VERSION) {
    throw new Error(`protocol version mismatch: got ${msg.v}`);
  }
  if (!["state_frame", "hello", "ack", "error"].includes(msg.type)) {
    throw new Error(`unknown server frame type ${msg.type}`);
  }
  return msg as ServerFrame;
}

export function encodeCommand(cmd: Command, seq: number): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, seq, ...cmd });
}
