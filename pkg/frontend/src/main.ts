// Browser wiring of the operator console.

import { ConsoleClient } from "./client.js";
import { StripChart } from "./chart.js";
import { applyMessage, declareDone, newViewModel, startChallenge } from "./viewmodel.js";

const vm = newViewModel();
let client: ConsoleClient | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const chart = new StripChart($<HTMLCanvasElement>("trace"));
const status = $<HTMLSpanElement>("status");
const errorBox = $<HTMLDivElement>("error");
const crystalBox = $<HTMLDivElement>("crystal");
const readout = $<HTMLDivElement>("readout");
const tally = $<HTMLDivElement>("tally");

const ISOTOPE_COLORS: Record<number, string> = { 88: "#4fc3f7", 86: "#ffb74d", 87: "#b0bec5" };

function renderCrystal(): void {
  crystalBox.innerHTML = "";
  for (const ion of vm.crystal) {
    const dot = document.createElement("span");
    dot.className = "ion";
    dot.style.background = ISOTOPE_COLORS[ion.isotope] ?? "#e57373";
    dot.title = `${ion.isotope}Sr+ (${ion.coolingClass})`;
    dot.textContent = String(ion.isotope);
    crystalBox.appendChild(dot);
  }
  if (!vm.crystal.length) crystalBox.textContent = "(empty trap)";
}

function renderControls(): void {
  $<HTMLInputElement>("oven-power").placeholder = vm.controls.ovenPowerW.toFixed(2);
  $<HTMLSpanElement>("oven-ack").textContent = `${vm.controls.ovenPowerW.toFixed(2)} W`;
  for (const name of ["461", "405", "cooling"]) {
    const btn = $<HTMLButtonElement>(`shutter-${name}`);
    const open = vm.controls.shutters[name];
    btn.textContent = `${name}: ${open ? "OPEN" : "closed"}`;
    btn.classList.toggle("open", !!open);
  }
  $<HTMLSpanElement>("det461-ack").textContent = `${vm.controls.detuning461MHz.toFixed(0)} MHz`;
  $<HTMLSpanElement>("det422-ack").textContent = `${vm.controls.detuning422MHz.toFixed(0)} MHz`;
  $<HTMLSpanElement>("scale-ack").textContent = `${vm.controls.timeScale.toFixed(1)}x`;
}

function renderReadout(): void {
  readout.textContent =
    `t = ${vm.simTime.toFixed(1)} s   oven ${vm.temperatureK.toFixed(0)} K   ` +
    `ions ${vm.crystal.length}   captured ${vm.capturedTotal}   ` +
    `ionized ${vm.ionizedTotal}   rejected ${vm.rejectedTotal}`;
  status.textContent = vm.connection;
  status.className = vm.connection;
  errorBox.textContent = vm.lastError ?? "";
}

function renderTally(): void {
  const c = vm.challenge;
  tally.textContent = c.attempts
    ? `target ${c.targetN}: ${c.successes}/${c.attempts} ` +
      `(${((100 * c.successes) / c.attempts).toFixed(0)}%)`
    : "no attempts yet";
  $<HTMLButtonElement>("challenge-done").disabled = !c.armed;
}

function frame(): void {
  chart.render(vm.bins.toArray(), vm.simTime);
  renderReadout();
  requestAnimationFrame(frame);
}

async function connect(): Promise<void> {
  vm.connection = "connecting";
  const resp = await fetch("/api/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ time_scale: Number($<HTMLInputElement>("time-scale").value) || 1 }),
  });
  const info = await resp.json();
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${proto}://${location.host}/api/sessions/${info.session_id}/stream`);
  client = new ConsoleClient(ws as never);
  client.onMessage = (msg) => {
    applyMessage(vm, msg);
    if (msg.type === "hello" || msg.type === "ack") renderControls();
    if (msg.type === "events") {
      renderCrystal();
      renderTally();
    }
  };
  client.onClose = () => {
    vm.connection = "disconnected";
  };
}

function send(cmd: Parameters<ConsoleClient["command"]>[0],
              args?: Parameters<ConsoleClient["command"]>[1]): void {
  client?.command(cmd, args).then(() => {
    renderControls();
    renderReadout();
  });
}

function wireControls(): void {
  $<HTMLButtonElement>("oven-set").onclick = () => {
    const value = Number($<HTMLInputElement>("oven-power").value);
    if (!Number.isFinite(value) || value < 0) {
      vm.lastError = "oven power must be a nonnegative number";
      return;
    }
    send("set_oven_power", { power_w: value });
  };
  for (const name of ["461", "405", "cooling"]) {
    $<HTMLButtonElement>(`shutter-${name}`).onclick = () =>
      send("set_shutter", { name, open: !vm.controls.shutters[name] });
  }
  $<HTMLButtonElement>("det461-set").onclick = () =>
    send("set_detuning", { laser: "461",
                          detuning_mhz: Number($<HTMLInputElement>("det461").value) });
  $<HTMLButtonElement>("det422-set").onclick = () =>
    send("set_detuning", { laser: "422",
                          detuning_mhz: Number($<HTMLInputElement>("det422").value) });
  $<HTMLButtonElement>("scale-set").onclick = () =>
    send("set_time_scale", { scale: Number($<HTMLInputElement>("time-scale").value) });
  $<HTMLButtonElement>("clear-trap").onclick = () => send("clear_trap");
  $<HTMLButtonElement>("challenge-start").onclick = () => {
    startChallenge(vm, Number($<HTMLInputElement>("challenge-n").value) || 1);
    renderTally();
  };
  $<HTMLButtonElement>("challenge-done").onclick = () => {
    declareDone(vm);
    renderTally();
  };
}

window.addEventListener("load", () => {
  wireControls();
  renderCrystal();
  renderTally();
  connect().catch((err) => {
    vm.lastError = String(err);
    vm.connection = "disconnected";
  });
  frame();
});
