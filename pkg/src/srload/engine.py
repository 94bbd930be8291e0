"""Event-sourced interactive loading session.

The session advances in fixed physics ticks (default 10 ms of sim time).
All stochastic draws come from purpose-split RNG streams consumed in sim-
time order (ionization/capture from per-tick draws, per-ion shelving jumps
from per-ion streams, fluorescence from a per-bin stream), so a session is
a pure function of (config, seed, timestamped command script): replaying
the same script yields a bit-identical event log regardless of wall-clock
pacing or how the advancing calls are chunked.

Commands take effect exactly at their sim timestamps: ``advance_to`` splits
the walk at every pending command time.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .capture import CoolingClass, IonCrystal, capture, classify_cooling
from .config import SimConfig
from .constants import TWO_PI
from .ionization import LaserSetup, LoadingRateModel
from .source import oven_temperature
from .streams import spawn_generator

__all__ = ["SimEvent", "SessionEngine", "run_target_n_protocol", "replay_crystal_size"]

PROTO_VERSION = 1

COMMANDS = ("set_oven_power", "set_shutter", "set_detuning", "set_time_scale", "clear_trap")
SHUTTERS = ("461", "405", "cooling")
OVEN_UPDATE_PERIOD = 1.0  # s of sim time between oven telemetry events


@dataclass(frozen=True)
class SimEvent:
    seq: int
    sim_time: float
    kind: str
    payload: dict[str, Any]

    def to_wire(self) -> dict[str, Any]:
        return {"seq": self.seq, "t": round(self.sim_time, 9), "kind": self.kind,
                **self.payload}


@dataclass
class _IonState:
    ion_id: int
    mass_number: int
    cooling_class: CoolingClass
    bright: bool = True
    next_jump: float = math.inf


@dataclass(order=True)
class _PendingCommand:
    at_time: float
    order: int
    name: str = field(compare=False)
    args: dict = field(compare=False)


class SessionEngine:
    """Single-writer simulation core behind the console service."""

    def __init__(self, config: SimConfig, seed: int | None = None):
        self.cfg = config
        self.seed = int(seed if seed is not None else config.master_seed)
        self.sim_time = 0.0
        self.time_scale = 1.0
        self.oven_power = 0.0
        self.oven_on_time: float | None = None
        self.shutters = {name: False for name in SHUTTERS}
        self.detuning_461 = config.lasers.beam_461.detuning
        self.detuning_422 = config.cooling_detuning_422
        self.crystal = IonCrystal(capacity=config.trap.capacity)
        self.events: list[SimEvent] = []
        self.command_log: list[dict] = []
        self._pending: list[_PendingCommand] = []
        self._cmd_counter = 0
        self._ion_counter = 0
        self._ions: list[_IonState] = []
        self._ticks_done = 0
        self._ticks_per_bin = max(int(round(config.fluorescence_bin_s / config.tick_s)), 1)
        self._ticks_per_oven_update = max(int(round(OVEN_UPDATE_PERIOD / config.tick_s)), 1)
        self._rng_events = spawn_generator(self.seed, "session-events")
        self._rng_capture = spawn_generator(self.seed, "session-capture")
        self._rng_fluor = spawn_generator(self.seed, "session-fluor")
        self._ion_rngs: dict[int, np.random.Generator] = {}
        self._rate_model: LoadingRateModel | None = None
        self._rate_cache: dict[int, np.ndarray] = {}
        self._emit("oven_update", temperature_k=config.oven.ambient_temperature,
                   power_w=0.0)

    # ------------------------------------------------------------- events
    def _emit(self, kind: str, **payload) -> SimEvent:
        ev = SimEvent(len(self.events), self.sim_time, kind, payload)
        self.events.append(ev)
        return ev

    def stream(self, from_cursor: int = 0) -> tuple[list[SimEvent], int]:
        """Events at cursor positions >= from_cursor; stale cursors restart."""
        if from_cursor < 0 or from_cursor > len(self.events):
            from_cursor = 0
        return self.events[from_cursor:], len(self.events)

    # ----------------------------------------------------------- commands
    def apply_command(self, name: str, args: dict | None = None,
                      at_sim_time: float | None = None) -> dict:
        """Queue a command to take effect at ``at_sim_time`` (default: now).

        Returns an acknowledgment dict; raises ValueError on bad commands so
        callers can surface the rejection without mutating state.
        """
        args = dict(args or {})
        when = self.sim_time if at_sim_time is None else float(at_sim_time)
        if when < self.sim_time:
            raise ValueError(f"command time {when} is before sim time {self.sim_time}")
        self._validate_command(name, args)
        self._cmd_counter += 1
        bisect.insort(self._pending, _PendingCommand(when, self._cmd_counter, name, args))
        self.command_log.append({"name": name, "args": args, "at": when})
        return {"command": name, "at_sim_time": when, "accepted": True}

    def _validate_command(self, name: str, args: dict) -> None:
        if name not in COMMANDS:
            raise ValueError(f"unknown command {name!r}")
        if name == "set_oven_power":
            power = args.get("power_w")
            if not isinstance(power, (int, float)) or power < 0 or power > 20:
                raise ValueError("set_oven_power: power_w must be in [0, 20] W")
        elif name == "set_shutter":
            if args.get("name") not in SHUTTERS:
                raise ValueError(f"set_shutter: name must be one of {SHUTTERS}")
            if not isinstance(args.get("open"), bool):
                raise ValueError("set_shutter: open must be a boolean")
        elif name == "set_detuning":
            if args.get("laser") not in ("461", "422"):
                raise ValueError("set_detuning: laser must be '461' or '422'")
            mhz = args.get("detuning_mhz")
            if not isinstance(mhz, (int, float)) or abs(mhz) > 20000:
                raise ValueError("set_detuning: detuning_mhz must be within +-20 GHz")
        elif name == "set_time_scale":
            scale = args.get("scale")
            if not isinstance(scale, (int, float)) or not 0.01 <= scale <= 1000:
                raise ValueError("set_time_scale: scale must be in [0.01, 1000]")

    def _execute(self, cmd: _PendingCommand) -> None:
        name, args = cmd.name, cmd.args
        if name == "set_oven_power":
            power = float(args["power_w"])
            if power > 0 and self.oven_power == 0:
                self.oven_on_time = self.sim_time
            elif power == 0:
                self.oven_on_time = None
            self.oven_power = power
            self._rate_cache.clear()
            self._emit("oven_update", temperature_k=self._temperature(), power_w=power)
        elif name == "set_shutter":
            self.shutters[args["name"]] = bool(args["open"])
            self._rate_cache.clear()
            if args["name"] == "405":
                self._reseed_shelving()
        elif name == "set_detuning":
            value = TWO_PI * float(args["detuning_mhz"]) * 1e6
            if args["laser"] == "461":
                self.detuning_461 = value
            else:
                self.detuning_422 = value
            self._rate_cache.clear()
        elif name == "set_time_scale":
            self.time_scale = float(args["scale"])
        elif name == "clear_trap":
            self.crystal.clear()
            self._ions.clear()
            self._emit("cleared")
        self._emit("command_applied", name=name, **{f"arg_{k}": v for k, v in args.items()})

    # ------------------------------------------------------------ physics
    def _temperature(self) -> float:
        if self.oven_on_time is None or self.oven_power <= 0:
            return self.cfg.oven.ambient_temperature
        from dataclasses import replace

        oven = replace(self.cfg.oven, dissipated_power=self.oven_power)
        return float(oven_temperature(oven, self.sim_time - self.oven_on_time))

    def _lasers(self) -> LaserSetup:
        from dataclasses import replace

        beam = replace(self.cfg.lasers.beam_461, detuning=self.detuning_461)
        return LaserSetup(beam, self.cfg.lasers.beam_405,
                          shutter_461=self.shutters["461"],
                          shutter_405=self.shutters["405"])

    def _rates(self) -> np.ndarray:
        """Per-isotope ion-creation rates at the current tick, cached by T bin.

        The transit table is detuning-agnostic, so one model (built with
        shutters notionally open) serves every shutter/detuning state; the
        shutter gate lives here.
        """
        if not (self.shutters["461"] and self.shutters["405"]):
            return np.zeros(len(self.cfg.isotopes))
        if self._rate_model is None:
            self._rate_model = self.cfg.engine_rate_model()
        model = self._rate_model
        t_bin = int(self._temperature() / model.T_BIN)
        cached = self._rate_cache.get(t_bin)
        if cached is None:
            cached = model.rates(t_bin * model.T_BIN, self.detuning_461)
            self._rate_cache[t_bin] = cached
        return cached

    def _shelving_rate(self) -> float:
        if not self.shutters["405"]:
            return 0.0
        return self.cfg.shelving_rate(self.cfg.lasers.beam_405.power)

    def _draw_next_jump(self, ion: _IonState) -> None:
        rng = self._ion_rngs.setdefault(
            ion.ion_id, spawn_generator(self.seed, "session-ion", ion.ion_id))
        if ion.bright:
            rate = self._shelving_rate()
            ion.next_jump = self.sim_time + (rng.exponential(1.0 / rate)
                                             if rate > 0 else math.inf)
        else:
            ion.next_jump = self.sim_time + rng.exponential(self.cfg.telegraph.deshelving_rate ** -1)

    def _reseed_shelving(self) -> None:
        """Shutter toggles change the bright-state exit rate (memoryless redraw)."""
        for ion in self._ions:
            if ion.bright:
                self._draw_next_jump(ion)

    # ------------------------------------------------------------ advance
    def advance_to(self, t_target: float) -> None:
        """Advance the simulation to (the tick boundary at or below) t_target.

        Physics steps always align to the absolute tick grid, tracked by an
        integer tick counter so boundaries are exact products, never
        accumulated floats.  A tick is split only at pending command times;
        the reachable frontier is therefore a function of the command script
        alone, never of how callers chunk their advance_to() calls.
        """
        if t_target < self.sim_time - 1e-9:
            raise ValueError("cannot advance backwards")
        tick = self.cfg.tick_s
        n_target = int(math.floor(t_target / tick + 1e-9))
        while True:
            # execute commands due at the current frontier
            while self._pending and self._pending[0].at_time <= self.sim_time + 1e-12:
                self._execute(self._pending.pop(0))
            if self._ticks_done >= n_target:
                return
            boundary = (self._ticks_done + 1) * tick
            seg_end = boundary
            if self._pending:
                seg_end = min(seg_end, self._pending[0].at_time)
            if seg_end > self.sim_time + 1e-12:
                self._step(seg_end)
            if self.sim_time >= boundary - 1e-12:
                self.sim_time = boundary
                self._ticks_done += 1
                self._on_tick_boundary()

    def _step(self, t1: float) -> None:
        t0 = self.sim_time
        dt = t1 - t0
        # draw this step's creation events (order of draws fixed by isotope)
        rates = self._rates()
        cooling_on = self.shutters["cooling"]
        births: list[tuple[float, int]] = []
        for i in range(len(self.cfg.isotopes)):
            lam = rates[i] * dt
            n = int(self._rng_events.poisson(lam)) if lam > 0 else 0
            for _ in range(n):
                births.append((t0 + self._rng_events.uniform(0.0, dt), i))
        births.sort()
        # merge creations and telegraph jumps in time order
        b_idx = 0
        while True:
            t_birth = births[b_idx][0] if b_idx < len(births) else math.inf
            jumpers = [ion for ion in self._ions if ion.next_jump <= t1 + 1e-15]
            t_jump = math.inf
            jumper = None
            if jumpers:
                jumper = min(jumpers, key=lambda s: (s.next_jump, s.ion_id))
                t_jump = jumper.next_jump
            if b_idx >= len(births) and jumper is None:
                break
            if t_birth <= t_jump:
                t_event, iso_idx = births[b_idx]
                b_idx += 1
                iso = self.cfg.isotopes[iso_idx]
                self._ion_counter += 1
                ion_id = self._ion_counter
                self.sim_time = t_event
                self._emit("ionized", isotope=iso.mass_number, ion_id=ion_id)
                cls = (classify_cooling(iso, self.detuning_422, self.cfg.cooling_far_threshold)
                       if cooling_on else CoolingClass.UNCOUPLED)
                ok, reason = capture(iso, cls, self.crystal, self.cfg.capture_model,
                                     self._rng_capture, capture_time=t_event, ion_id=ion_id)
                if ok:
                    state = _IonState(ion_id, iso.mass_number, cls)
                    self._ions.append(state)
                    self._draw_next_jump(state)
                    self._emit("captured", isotope=iso.mass_number, ion_id=ion_id,
                               cooling_class=cls.value, crystal_size=self.crystal.size())
                else:
                    self._emit("rejected", isotope=iso.mass_number, ion_id=ion_id,
                               reason=reason)
            else:
                self.sim_time = jumper.next_jump
                jumper.bright = not jumper.bright
                self._emit("shelved" if not jumper.bright else "deshelved",
                           ion_id=jumper.ion_id)
                self._draw_next_jump(jumper)
        self.sim_time = t1

    def _on_tick_boundary(self) -> None:
        """Periodic emissions; called once per completed tick."""
        if self._ticks_done % self._ticks_per_bin == 0:
            self._emit_fluorescence_bin()
        if self._ticks_done % self._ticks_per_oven_update == 0:
            self._emit("oven_update", temperature_k=self._temperature(),
                       power_w=self.oven_power)

    def _emit_fluorescence_bin(self) -> None:
        tg = self.cfg.telegraph
        bin_w = self.cfg.fluorescence_bin_s
        mean = tg.dark_count_rate * bin_w
        n_bright = 0
        if self.shutters["cooling"]:
            for ion in self._ions:
                if ion.cooling_class is CoolingClass.COOLED and ion.bright:
                    n_bright += 1
            mean += n_bright * tg.bright_scatter_rate * tg.collection_efficiency * bin_w
        counts = int(self._rng_fluor.poisson(mean))
        self._emit("fluorescence_bin", counts=counts, n_bright=n_bright,
                   crystal_size=self.crystal.size())

    # ------------------------------------------------------------ queries
    def snapshot(self) -> dict:
        return {
            "sim_time": self.sim_time,
            "time_scale": self.time_scale,
            "oven_power_w": self.oven_power,
            "temperature_k": self._temperature(),
            "shutters": dict(self.shutters),
            "detuning_461_mhz": self.detuning_461 / TWO_PI / 1e6,
            "detuning_422_mhz": self.detuning_422 / TWO_PI / 1e6,
            "crystal": [
                {"ion_id": ion.ion_id, "isotope": ion.mass_number,
                 "cooling_class": ion.cooling_class.value}
                for ion in self._ions],
            "created_total": dict(self.crystal.created_total),
            "n_events": len(self.events),
        }


def replay_crystal_size(events: list[SimEvent]) -> int:
    """Crystal size implied by a full event log (captured minus cleared)."""
    size = 0
    for ev in events:
        if ev.kind == "captured":
            size += 1
        elif ev.kind == "cleared":
            size = 0
    return size


def run_target_n_protocol(config: SimConfig, seed: int, target_n: int,
                          attempts: int, reaction_s: float = 0.05,
                          warmup_s: float = 40.0, settle_s: float = 1.0,
                          attempt_timeout_s: float = 120.0) -> dict:
    """Scripted operator: close both photoionization shutters one reaction
    bin after the Nth capture; an attempt succeeds when exactly N ions sit
    in the trap after the shutters are closed.

    The oven is heated once and kept hot; each attempt opens the shutters,
    waits for N captures, reacts, settles, scores and clears the trap.
    """
    eng = SessionEngine(config, seed)
    eng.apply_command("set_oven_power", {"power_w": config.oven.dissipated_power})
    eng.apply_command("set_shutter", {"name": "cooling", "open": True})
    eng.advance_to(warmup_s)

    successes = 0
    results: list[bool] = []
    for _ in range(attempts):
        eng.apply_command("set_shutter", {"name": "461", "open": True})
        eng.apply_command("set_shutter", {"name": "405", "open": True})
        captures = 0
        cursor = len(eng.events)
        deadline = eng.sim_time + attempt_timeout_s
        closed_at = None
        while closed_at is None and eng.sim_time < deadline:
            eng.advance_to(min(eng.sim_time + eng.cfg.fluorescence_bin_s, deadline))
            new, cursor = eng.stream(cursor)
            for ev in new:
                if ev.kind == "captured":
                    captures += 1
                    if captures >= target_n and closed_at is None:
                        closed_at = ev.sim_time + reaction_s
                        eng.apply_command("set_shutter", {"name": "461", "open": False},
                                          at_sim_time=closed_at)
                        eng.apply_command("set_shutter", {"name": "405", "open": False},
                                          at_sim_time=closed_at)
        if closed_at is not None:
            eng.advance_to(closed_at + settle_s)
        ok = eng.crystal.size() == target_n
        successes += ok
        results.append(ok)
        eng.apply_command("clear_trap")
        eng.advance_to(eng.sim_time + 2 * eng.cfg.tick_s)
    return {"target_n": target_n, "attempts": attempts, "successes": successes,
            "success_fraction": successes / attempts, "results": results}
