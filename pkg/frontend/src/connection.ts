/**
 * Teleoperation session: socket lifecycle, seq bookkeeping and ack
 * tracking. Works with the browser WebSocket or any compatible
 * implementation (the tests inject the "ws" package's client).
 */

import {
  AckFrame,
  Command,
  ErrorFrame,
  HelloFrame,
  ServerFrame,
  StateFrame,
  encodeCommand,
  parseServerFrame,
} from "./protocol.js";

export interface WebSocketish {
  send(data: string): void;
  close(): void;
  addEventListener(kind: string, fn: (ev: any) => void): void;
}

export type SocketFactory = (url: string) => WebSocketish;

export interface SessionEvents {
  onHello?: (hello: HelloFrame) => void;
  onFrame?: (frame: StateFrame) => void;
  onAck?: (ack: AckFrame) => void;
  onError?: (err: ErrorFrame) => void;
  onClose?: () => void;
  onProtocolError?: (message: string) => void;
}

interface Pending {
  command: Command;
  resolve: (ok: boolean) => void;
  reject: (err: Error) => void;
}

export class TeleopSession {
  private socket: WebSocketish;
  private nextSeq = 1;
  private pending = new Map<number, Pending>();
  /** commands acknowledged by the server, in seq order */
  readonly commandLog: { seq: number; command: Command }[] = [];
  hello: HelloFrame | null = null;
  lastFrame: StateFrame | null = null;
  frameCount = 0;
  recording = false;

  constructor(url: string, private events: SessionEvents = {},
              factory?: SocketFactory) {
    const make = factory ?? ((u: string) => new WebSocket(u) as WebSocketish);
    this.socket = make(url);
    this.socket.addEventListener("message", (ev) => {
      this.handle(typeof ev.data === "string" ? ev.data : String(ev.data));
    });
    this.socket.addEventListener("close", () => this.events.onClose?.());
  }

  private handle(raw: string) {
    let frame: ServerFrame;
    try {
      frame = parseServerFrame(raw);
    } catch (err) {
      this.events.onProtocolError?.((err as Error).message);
      return;
    }
    switch (frame.type) {
      case "hello":
        this.hello = frame;
        this.events.onHello?.(frame);
        break;
      case "state_frame":
        this.lastFrame = frame;
        this.frameCount += 1;
        this.events.onFrame?.(frame);
        break;
      case "ack": {
        const pending = this.pending.get(frame.seq);
        if (pending) {
          this.pending.delete(frame.seq);
          if (this.recording) {
            this.commandLog.push({ seq: frame.seq, command: pending.command });
          }
          pending.resolve(true);
        }
        this.events.onAck?.(frame);
        break;
      }
      case "error": {
        if (frame.seq !== null) {
          const pending = this.pending.get(frame.seq);
          if (pending) {
            this.pending.delete(frame.seq);
            pending.resolve(false);
          }
        }
        this.events.onError?.(frame);
        break;
      }
    }
  }

  /** Send a command; resolves true on ack, false on an error reply. */
  send(command: Command): Promise<boolean> {
    const seq = this.nextSeq;
    this.nextSeq += 1;
    return new Promise<boolean>((resolve, reject) => {
      this.pending.set(seq, { command, resolve, reject });
      this.socket.send(encodeCommand(command, seq));
    });
  }

  pendingCount(): number {
    return this.pending.size;
  }

  close() {
    this.socket.close();
  }
}
