/**
 * Single UI state store. Socket events and user input both funnel through
 * here; the render loop reads it. The UI holds no physics of its own:
 * every displayed quantity arrives in server frames.
 */

import { HelloFrame, StateFrame } from "./protocol.js";

export type ConnectionStatus =
  | "disconnected"
  | "connecting"
  | "connected"
  | "observer"
  | "error";

export interface UiSessionState {
  status: ConnectionStatus;
  scenario: string;
  banner: string;
  frame: StateFrame | null;
  selectedMember: string | null;
  selectedNodes: string[];
  recording: boolean;
  framesSeen: number;
}

export function initialState(): UiSessionState {
  return {
    status: "disconnected",
    scenario: "",
    banner: "",
    frame: null,
    selectedMember: null,
    selectedNodes: [],
    recording: false,
    framesSeen: 0,
  };
}

export class Store {
  state = initialState();
  private listeners: (() => void)[] = [];

  subscribe(fn: () => void) {
    this.listeners.push(fn);
  }

  private emit() {
    for (const fn of this.listeners) fn();
  }

  setStatus(status: ConnectionStatus, banner = "") {
    this.state.status = status;
    this.state.banner = banner;
    this.emit();
  }

  applyHello(hello: HelloFrame) {
    this.state.scenario = hello.scenario;
    this.state.status = hello.operator ? "connected" : "observer";
    this.emit();
  }

  applyFrame(frame: StateFrame) {
    // frames are applied whole: the renderer never sees a partial update
    this.state.frame = frame;
    this.state.framesSeen += 1;
    this.emit();
  }

  toggleNode(id: string) {
    const sel = this.state.selectedNodes;
    const at = sel.indexOf(id);
    if (at >= 0) sel.splice(at, 1);
    else {
      sel.push(id);
      while (sel.length > 2) sel.shift();
    }
    this.emit();
  }

  selectMember(id: string | null) {
    this.state.selectedMember = id;
    this.emit();
  }

  setRecording(on: boolean) {
    this.state.recording = on;
    this.emit();
  }
}
