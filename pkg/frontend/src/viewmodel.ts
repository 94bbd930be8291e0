// Console view model: a pure reducer over the server message stream.
//
// All physics-derived state (crystal contents, counts, temperatures) comes
// exclusively from the event stream; control values reflect the last
// *acknowledged* server state, never optimistic local edits.  Replaying a
// recorded message stream therefore reconstructs the identical view.

import { RingBuffer } from "./ringbuffer.js";
import type { ServerMsg, SimEventWire, SnapshotWire } from "./protocol.js";

export interface BinView {
  t: number;
  counts: number;
  nBright: number;
  crystalSize: number;
  gapBefore: boolean;
}

export interface IonView {
  ionId: number;
  isotope: number;
  coolingClass: string;
}

export interface ControlsView {
  ovenPowerW: number;
  shutters: { [name: string]: boolean };
  detuning461MHz: number;
  detuning422MHz: number;
  timeScale: number;
}

export interface ChallengeView {
  targetN: number;
  attempts: number;
  successes: number;
  capturesThisAttempt: number;
  armed: boolean;
}

export interface ConsoleViewModel {
  connection: "disconnected" | "connecting" | "connected";
  protoVersion: number | null;
  sessionId: string | null;
  simTime: number;
  temperatureK: number;
  binSeconds: number;
  bins: RingBuffer<BinView>;
  crystal: IonView[];
  capturedTotal: number;
  clearedTotal: number;
  rejectedTotal: number;
  ionizedTotal: number;
  controls: ControlsView;
  challenge: ChallengeView;
  cursor: number;
  lastError: string | null;
}

// >= 60 s of history at the default 50 ms bin
const BIN_CAPACITY = 1600;

export function newViewModel(): ConsoleViewModel {
  return {
    connection: "disconnected",
    protoVersion: null,
    sessionId: null,
    simTime: 0,
    temperatureK: 0,
    binSeconds: 0.05,
    bins: new RingBuffer<BinView>(BIN_CAPACITY),
    crystal: [],
    capturedTotal: 0,
    clearedTotal: 0,
    rejectedTotal: 0,
    ionizedTotal: 0,
    controls: {
      ovenPowerW: 0,
      shutters: { "461": false, "405": false, cooling: false },
      detuning461MHz: 0,
      detuning422MHz: 0,
      timeScale: 1,
    },
    challenge: { targetN: 1, attempts: 0, successes: 0, capturesThisAttempt: 0, armed: false },
    cursor: 0,
    lastError: null,
  };
}

function controlsFromSnapshot(snap: SnapshotWire): ControlsView {
  return {
    ovenPowerW: snap.oven_power_w,
    shutters: { ...snap.shutters },
    detuning461MHz: snap.detuning_461_mhz,
    detuning422MHz: snap.detuning_422_mhz,
    timeScale: snap.time_scale,
  };
}

function applyEvent(vm: ConsoleViewModel, ev: SimEventWire, gapBefore: boolean): void {
  vm.simTime = ev.t;
  switch (ev.kind) {
    case "fluorescence_bin":
      vm.bins.push({
        t: ev.t,
        counts: ev.counts ?? 0,
        nBright: ev.n_bright ?? 0,
        crystalSize: ev.crystal_size ?? vm.crystal.length,
        gapBefore,
      });
      break;
    case "captured":
      vm.capturedTotal += 1;
      vm.challenge.capturesThisAttempt += 1;
      vm.crystal.push({
        ionId: ev.ion_id ?? -1,
        isotope: ev.isotope ?? 0,
        coolingClass: ev.cooling_class ?? "unknown",
      });
      break;
    case "cleared":
      vm.clearedTotal += vm.crystal.length;
      vm.crystal = [];
      break;
    case "rejected":
      vm.rejectedTotal += 1;
      break;
    case "ionized":
      vm.ionizedTotal += 1;
      break;
    case "oven_update":
      if (typeof ev.temperature_k === "number") vm.temperatureK = ev.temperature_k;
      break;
    default:
      break; // shelved/deshelved/command_applied show up in the trace only
  }
}

export function applyMessage(vm: ConsoleViewModel, msg: ServerMsg): void {
  switch (msg.type) {
    case "hello": {
      vm.connection = "connected";
      vm.protoVersion = msg.proto_version;
      vm.sessionId = msg.session_id;
      vm.simTime = msg.sim_time;
      vm.binSeconds = msg.bin_s;
      vm.temperatureK = msg.snapshot.temperature_k;
      vm.controls = controlsFromSnapshot(msg.snapshot);
      vm.crystal = msg.snapshot.crystal.map((ion) => ({
        ionId: ion.ion_id,
        isotope: ion.isotope,
        coolingClass: ion.cooling_class,
      }));
      vm.cursor = msg.cursor;
      break;
    }
    case "events": {
      // a cursor jump means missed events: mark a visual gap, never interpolate
      let gap = msg.cursor_start > vm.cursor;
      for (const ev of msg.events) {
        applyEvent(vm, ev, gap && ev.kind === "fluorescence_bin");
        if (ev.kind === "fluorescence_bin") gap = false;
        vm.cursor = Math.max(vm.cursor, ev.seq + 1);
      }
      break;
    }
    case "ack": {
      if (msg.ok && msg.state) {
        vm.controls = controlsFromSnapshot(msg.state);
        vm.lastError = null;
      } else if (!msg.ok) {
        vm.lastError = msg.error ?? "command rejected";
      }
      break;
    }
  }
}

// ---------------------------------------------------------------- challenge

export function startChallenge(vm: ConsoleViewModel, targetN: number): void {
  if (targetN < 1) throw new Error("target must be >= 1");
  vm.challenge.targetN = targetN;
  vm.challenge.armed = true;
  vm.challenge.capturesThisAttempt = 0;
}

/** Score the current attempt: success iff the crystal holds exactly N ions. */
export function declareDone(vm: ConsoleViewModel): boolean {
  if (!vm.challenge.armed) return false;
  const ok = vm.crystal.length === vm.challenge.targetN;
  vm.challenge.attempts += 1;
  if (ok) vm.challenge.successes += 1;
  vm.challenge.armed = false;
  return ok;
}

/** Serializable summary used by the replay-fidelity check. */
export function viewFingerprint(vm: ConsoleViewModel): string {
  return JSON.stringify({
    connection: vm.connection,
    simTime: vm.simTime,
    temperatureK: vm.temperatureK,
    crystal: vm.crystal,
    capturedTotal: vm.capturedTotal,
    clearedTotal: vm.clearedTotal,
    rejectedTotal: vm.rejectedTotal,
    ionizedTotal: vm.ionizedTotal,
    controls: vm.controls,
    challenge: vm.challenge,
    cursor: vm.cursor,
    bins: vm.bins.toArray(),
  });
}
