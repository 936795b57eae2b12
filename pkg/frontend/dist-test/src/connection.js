/**
 * Teleoperation session: socket lifecycle, seq bookkeeping and ack
 * tracking. Works with the browser WebSocket or any compatible
 * implementation (the tests inject the "ws" package's client).
 */
import { encodeCommand, parseServerFrame, } from "./protocol.js";
export class TeleopSession {
    events;
    socket;
    nextSeq = 1;
    pending = new Map();
    /** commands acknowledged by the server, in seq order */
    commandLog = [];
    hello = null;
    lastFrame = null;
    frameCount = 0;
    recording = false;
    constructor(url, events = {}, factory) {
        this.events = events;
        const make = factory ?? ((u) => new WebSocket(u));
        this.socket = make(url);
        this.socket.addEventListener("message", (ev) => {
            this.handle(typeof ev.data === "string" ? ev.data : String(ev.data));
        });
        this.socket.addEventListener("close", () => this.events.onClose?.());
    }
    handle(raw) {
        let frame;
        try {
            frame = parseServerFrame(raw);
        }
        catch (err) {
            this.events.onProtocolError?.(err.message);
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
    send(command) {
        const seq = this.nextSeq;
        this.nextSeq += 1;
        return new Promise((resolve, reject) => {
            this.pending.set(seq, { command, resolve, reject });
            this.socket.send(encodeCommand(command, seq));
        });
    }
    pendingCount() {
        return this.pending.size;
    }
    close() {
        this.socket.close();
    }
}
