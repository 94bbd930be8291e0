// Wire protocol of the console service (proto_version 1).
// One newline-terminated JSON message per WebSocket frame.

export const PROTO_VERSION = 1;

export interface SimEventWire {
  seq: number;
  t: number;
  kind: string;
  // payload fields are flattened onto the event object
  counts?: number;
  n_bright?: number;
  crystal_size?: number;
  isotope?: number;
  ion_id?: number;
  cooling_class?: string;
  reason?: string;
  temperature_k?: number;
  power_w?: number;
  name?: string;
  [extra: string]: unknown;
}

export interface SnapshotWire {
  sim_time: number;
  time_scale: number;
  oven_power_w: number;
  temperature_k: number;
  shutters: { [name: string]: boolean };
  detuning_461_mhz: number;
  detuning_422_mhz: number;
  crystal: { ion_id: number; isotope: number; cooling_class: string }[];
  created_total: { [mass: string]: number };
  n_events: number;
}

export interface HelloMsg {
  type: "hello";
  proto_version: number;
  session_id: string;
  sim_time: number;
  time_scale: number;
  bin_s: number;
  snapshot: SnapshotWire;
  cursor: number;
}

export interface EventsMsg {
  type: "events";
  proto_version: number;
  cursor_start: number;
  events: SimEventWire[];
}

export interface AckMsg {
  type: "ack";
  proto_version: number;
  req_id: number | null;
  ok: boolean;
  applied?: { command: string; at_sim_time: number; accepted: boolean };
  state?: SnapshotWire;
  error?: string;
}

export type ServerMsg = HelloMsg | EventsMsg | AckMsg;

export interface CommandMsg {
  type: "command";
  req_id: number;
  cmd: "set_oven_power" | "set_shutter" | "set_detuning" | "set_time_scale" | "clear_trap";
  args?: { [key: string]: unknown };
  at_sim_time?: number;
}

export function parseServerMsg(raw: string): ServerMsg {
  return JSON.parse(raw) as ServerMsg;
}
