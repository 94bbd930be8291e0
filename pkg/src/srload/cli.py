"""Batch experiment CLI.

    simulate fig2|fig3|isotopes|shelve|rate [--config PATH] [--seed N]
             [--out DIR] [--samples N] [--horizon SECONDS] [--workers N] ...

Every command writes CSV data files plus a JSON summary and a JSON run
manifest (config hash, seed, code version, command line, wall times and the
SHA-256 of every output file).  Re-running a command with the same config
and seed reproduces the data files byte for byte, for any worker count:
each Monte Carlo run draws from a generator derived from (seed, run index)
and results are reduced in index order.

Exit codes: 0 success, 2 configuration/usage error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .capture import loaded_fraction_report
from .config import ConfigError, SimConfig, config_hash, load_config
from .constants import TWO_PI, ordinary
from .fluorescence import TelegraphParams, telegraph_dwells, telegraph_trace
from .ionization import LoadingRateModel, loading_rate, sample_first_ion_times
from .source import steady_state_temperature
from .streams import spawn_generator

__all__ = ["main"]


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class RunContext:
    """Output directory, manifest bookkeeping, and the effective seed."""

    def __init__(self, args: argparse.Namespace, command: str):
        self.cfg = load_config(args.config)
        self.seed = args.seed if args.seed is not None else self.cfg.master_seed
        self.samples = args.samples if args.samples is not None else self.cfg.mc_samples
        self.horizon = args.horizon if args.horizon is not None else self.cfg.horizon_s
        self.workers = max(args.workers, 1)
        self.out_dir = args.out
        self.command = command
        self.argv = sys.argv[1:]
        self.started = _utc_now()
        self.outputs: list[str] = []
        os.makedirs(self.out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        p = os.path.join(self.out_dir, name)
        self.outputs.append(p)
        return p

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> str:
        p = self.path(name)
        with open(p, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(header)
            w.writerows(rows)
        return p

    def write_json(self, name: str, payload: dict) -> str:
        p = self.path(name)
        with open(p, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        return p

    def finish(self) -> None:
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "code_version": __version__,
            "config_hash": config_hash(self.cfg),
            "seed": self.seed,
            "mc_samples": self.samples,
            "horizon_s": self.horizon,
            "started": self.started,
            "finished": _utc_now(),
            "outputs": [{"path": os.path.basename(p), "sha256": _sha256(p)}
                        for p in self.outputs],
        }
        with open(os.path.join(self.out_dir, f"{self.command}_manifest.json"), "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")


def _first_ion_stats(ctx: RunContext, model: LoadingRateModel, power: float,
                     delta: float, stream: str, index: int) -> tuple[float, float, int]:
    """(mean, stderr, n_censored) of first-ion times over ctx.samples runs.

    Worker-count independent: the run block is seeded by (seed, stream,
    index) and drawn in one vectorized batch.
    """
    rng = spawn_generator(ctx.seed, stream, index)
    times = sample_first_ion_times(ctx.samples, rng, power, delta, model,
                                   ctx.cfg.oven, ctx.horizon)
    finite = np.isfinite(times)
    n_cens = int((~finite).sum())
    if finite.sum() == 0:
        return math.inf, math.inf, n_cens
    mean = float(times[finite].mean())
    se = float(times[finite].std(ddof=1) / math.sqrt(finite.sum())) if finite.sum() > 1 else math.inf
    return mean, se, n_cens


def _sweep(ctx: RunContext, model: LoadingRateModel, points: list[tuple[float, float]],
           stream: str) -> list[tuple[float, float, int]]:
    """Evaluate first-ion statistics at (power, delta) points, indexed deterministically."""
    def work(i: int) -> tuple[float, float, int]:
        power, delta = points[i]
        return _first_ion_stats(ctx, model, power, delta, stream, i)

    if ctx.workers == 1:
        return [work(i) for i in range(len(points))]
    with concurrent.futures.ThreadPoolExecutor(max_workers=ctx.workers) as pool:
        return list(pool.map(work, range(len(points))))


def cmd_fig2(args: argparse.Namespace) -> int:
    ctx = RunContext(args, "fig2")
    cfg = ctx.cfg
    powers = [float(p) for p in args.powers.split(",") if p.strip()]
    if not powers or any(p <= 0 for p in powers):
        print("fig2: power grid must be nonempty and positive", file=sys.stderr)
        return 2
    model = cfg.rate_model()
    delta = cfg.lasers.beam_461.detuning
    stats = _sweep(ctx, model, [(p, delta) for p in powers], "fig2")
    rows = []
    for p, (mean, se, cens) in zip(powers, stats):
        rows.append([f"{p:.6g}",
                     "inf" if math.isinf(mean) else f"{mean:.6f}",
                     "inf" if math.isinf(se) else f"{se:.6f}",
                     ctx.samples, cens])
    ctx.write_csv("fig2_first_ion_vs_power.csv",
                  ["power_w", "mean_time_s", "stderr_s", "n_runs", "n_censored"], rows)
    ctx.write_json("fig2_summary.json", {
        "powers_w": powers,
        "mean_time_s": [None if math.isinf(m) else m for m, _, _ in stats],
        "n_censored": [c for _, _, c in stats],
        "detuning_hz": ordinary(delta),
    })
    ctx.finish()
    return 0


def cmd_fig3(args: argparse.Namespace) -> int:
    ctx = RunContext(args, "fig3")
    cfg = ctx.cfg
    deltas_hz = [float(d) for d in args.detunings.split(",") if d.strip()]
    if not deltas_hz:
        print("fig3: detuning grid must be nonempty", file=sys.stderr)
        return 2
    span = (TWO_PI * (min(deltas_hz) - 0.3e9), TWO_PI * (max(deltas_hz) + 0.3e9))
    model = cfg.rate_model(delta_span=span)
    power = cfg.oven.dissipated_power
    stats = _sweep(ctx, model, [(power, TWO_PI * d) for d in deltas_hz], "fig3")
    rows = []
    for d, (mean, se, cens) in zip(deltas_hz, stats):
        rows.append([f"{d:.6g}", f"{cfg.frequency_zero_hz + d:.10g}",
                     "inf" if math.isinf(mean) else f"{mean:.6f}",
                     "inf" if math.isinf(se) else f"{se:.6f}",
                     ctx.samples, cens])
    ctx.write_csv("fig3_first_ion_vs_detuning.csv",
                  ["detuning_hz", "absolute_frequency_hz", "mean_time_s", "stderr_s",
                   "n_runs", "n_censored"], rows)
    finite = [(d, m) for d, (m, _, _) in zip(deltas_hz, stats) if math.isfinite(m)]
    ctx.write_json("fig3_summary.json", {
        "detunings_hz": deltas_hz,
        "mean_time_s": [None if math.isinf(m) else m for m, _, _ in stats],
        "n_censored": [c for _, _, c in stats],
        "minimum": None if not finite else {
            "detuning_hz": min(finite, key=lambda x: x[1])[0],
            "mean_time_s": min(finite, key=lambda x: x[1])[1]},
        "oven_power_w": power,
    })
    ctx.finish()
    return 0


def cmd_isotopes(args: argparse.Namespace) -> int:
    ctx = RunContext(args, "isotopes")
    cfg = ctx.cfg
    if args.loads < 100:
        print("isotopes: need at least 100 loads", file=sys.stderr)
        return 2
    model = cfg.rate_model()
    t_op = steady_state_temperature(cfg.oven)
    rates = model.rates(t_op, cfg.lasers.beam_461.detuning)
    creation = {iso.mass_number: float(r) for iso, r in zip(cfg.isotopes, rates)}
    rng = spawn_generator(ctx.seed, "isotopes")
    report = loaded_fraction_report(
        args.loads, creation, cfg.isotopes, cfg.capture_model,
        cfg.cooling_detuning_422, rng, cfg.cooling_far_threshold,
        capacity=cfg.trap.capacity)
    rows = [[m, f"{r['fraction']:.6f}", f"{r['ci_low']:.6f}", f"{r['ci_high']:.6f}",
             int(r["captured"])] for m, r in sorted(report.items())]
    ctx.write_csv("isotope_fractions.csv",
                  ["mass_number", "fraction", "ci95_low", "ci95_high", "n_captured"], rows)
    ctx.write_json("isotopes_summary.json", {
        "n_loads": args.loads,
        "creation_rates_per_s": creation,
        "fractions": {str(m): r["fraction"] for m, r in report.items()},
    })
    ctx.finish()
    return 0


def cmd_shelve(args: argparse.Namespace) -> int:
    ctx = RunContext(args, "shelve")
    cfg = ctx.cfg
    if args.duration <= 0:
        print("shelve: duration must be > 0", file=sys.stderr)
        return 2
    params = cfg.telegraph if args.ase else TelegraphParams(
        shelving_rate=0.0, deshelving_rate=cfg.telegraph.deshelving_rate,
        bright_scatter_rate=cfg.telegraph.bright_scatter_rate,
        collection_efficiency=cfg.telegraph.collection_efficiency,
        dark_count_rate=cfg.telegraph.dark_count_rate)
    rng = spawn_generator(ctx.seed, "shelve")
    trace = telegraph_trace(params, args.duration, cfg.fluorescence_bin_s, rng)
    rows = [[f"{t:.6f}", int(c), int(b)] for t, c, b in trace]
    ctx.write_csv("shelve_trace.csv", ["t_bin_start_s", "counts", "n_bright_ions"], rows)
    dark = [dw for _, bright, dw in telegraph_dwells(
        params, args.duration, spawn_generator(ctx.seed, "shelve-dwells")) if not bright]
    ctx.write_json("shelve_summary.json", {
        "duration_s": args.duration,
        "ase_on": bool(args.ase),
        "n_dark_periods": len(dark),
        "mean_dark_s": float(np.mean(dark)) if dark else None,
    })
    ctx.finish()
    return 0


def cmd_rate(args: argparse.Namespace) -> int:
    ctx = RunContext(args, "rate")
    cfg = ctx.cfg
    t_op = steady_state_temperature(cfg.oven)
    rng = spawn_generator(ctx.seed, "rate")
    table = loading_rate(t_op, cfg.lasers, cfg.geometry, cfg.isotopes,
                         cfg.profile_405, cfg.transition_461, cfg.oven,
                         ctx.samples, rng)
    rows = [[m, f"{r:.6g}", f"{se:.6g}"] for m, (r, se) in sorted(table.items())]
    total = sum(r for r, _ in table.values())
    ctx.write_csv("loading_rate.csv", ["mass_number", "rate_per_s", "stderr_per_s"], rows)
    ctx.write_json("rate_summary.json", {
        "temperature_k": t_op,
        "per_isotope_per_s": {str(m): r for m, (r, _) in table.items()},
        "total_per_s": total,
    })
    ctx.finish()
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simulate",
        description="Photoionization trap-loading experiments (batch).")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="YAML config path (default: built-in)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--samples", type=int, default=None, help="MC samples per point")
        p.add_argument("--horizon", type=float, default=None, help="censoring horizon (s)")
        p.add_argument("--workers", type=int, default=1, help="parallel workers")

    p2 = sub.add_parser("fig2", help="time to first ion vs oven power")
    common(p2)
    p2.add_argument("--powers", default="0.1,0.4,0.7,1.0,2.0,3.0",
                    help="comma-separated oven powers (W)")
    p2.set_defaults(func=cmd_fig2)

    p3 = sub.add_parser("fig3", help="time to first ion vs 461 nm detuning")
    common(p3)
    default_grid = ",".join(f"{d:.6g}" for d in np.linspace(-5e9, 5e9, 21))
    p3.add_argument("--detunings", default=default_grid,
                    help="comma-separated detunings from the 88Sr 461 nm line (Hz)")
    p3.set_defaults(func=cmd_fig3)

    pi = sub.add_parser("isotopes", help="loaded isotope fractions")
    common(pi)
    pi.add_argument("--loads", type=int, default=10000, help="number of simulated loads")
    pi.set_defaults(func=cmd_isotopes)

    ps = sub.add_parser("shelve", help="single-ion shelving telegraph trace")
    common(ps)
    ps.add_argument("--duration", type=float, default=100.0, help="trace length (s)")
    ps.add_argument("--ase", dest="ase", action="store_true", default=True,
                    help="405 nm ASE present (default)")
    ps.add_argument("--no-ase", dest="ase", action="store_false")
    ps.set_defaults(func=cmd_shelve)

    pr = sub.add_parser("rate", help="per-isotope loading rate at the operating point")
    common(pr)
    pr.set_defaults(func=cmd_rate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
