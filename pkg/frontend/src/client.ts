// Thin WebSocket client: parses server messages, correlates command acks.
// Transport-agnostic so the browser console and the node bot share it.

import { parseServerMsg } from "./protocol.js";
import type { AckMsg, CommandMsg, ServerMsg } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export class ConsoleClient {
  private nextReqId = 1;
  private pending = new Map<number, (ack: AckMsg) => void>();
  onMessage: ((msg: ServerMsg) => void) | null = null;
  onClose: (() => void) | null = null;

  constructor(private socket: SocketLike) {
    socket.onmessage = (ev) => {
      const msg = parseServerMsg(String(ev.data));
      if (msg.type === "ack" && msg.req_id !== null && this.pending.has(msg.req_id)) {
        const resolve = this.pending.get(msg.req_id)!;
        this.pending.delete(msg.req_id);
        resolve(msg);
      }
      this.onMessage?.(msg);
    };
    socket.onclose = () => {
      this.onClose?.();
    };
  }

  /** Send a command; resolves with the server acknowledgment. */
  command(cmd: CommandMsg["cmd"], args?: CommandMsg["args"],
          atSimTime?: number): Promise<AckMsg> {
    const reqId = this.nextReqId++;
    const msg: CommandMsg = { type: "command", req_id: reqId, cmd, args };
    if (atSimTime !== undefined) msg.at_sim_time = atSimTime;
    return new Promise((resolve) => {
      this.pending.set(reqId, resolve);
      this.socket.send(JSON.stringify(msg));
    });
  }

  close(): void {
    this.socket.close();
  }
}
