/**
 * Wire protocol types and helpers for the teleoperation channel.
 *
 * Frames are UTF-8 JSON text with a "v": 1 version tag. Every command the
 * client sends carries a strictly increasing seq; the server answers each
 * one with exactly one ack or error echoing that seq.
 */
export const PROTOCOL_VERSION = 1;
export function parseServerFrame(raw) {
    const msg = JSON.parse(raw);
    if (msg.v !== PROTOCOL_VERSION) {
        throw new Error(`protocol version mismatch: got ${msg.v}`);
    }
    if (!["state_frame", "hello", "ack", "error"].includes(msg.type)) {
        throw new Error(`unknown server frame type ${msg.type}`);
    }
    return msg;
}
export function encodeCommand(cmd, seq) {
    return JSON.stringify({ v: PROTOCOL_VERSION, seq, ...cmd });
}
