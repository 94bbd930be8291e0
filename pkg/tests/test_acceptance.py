"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line.  Tolerances are pinned here and nowhere else.

Run with:  pytest tests/test_acceptance.py -v -s
"""

import csv
import hashlib
import json
import math

import numpy as np
import pytest
from scipy import stats

from srload.capture import CaptureModel, loaded_fraction_report
from srload.cli import main as cli_main
from srload.constants import ATOMIC_MASS_UNIT, TWO_PI
from srload.engine import SessionEngine, run_target_n_protocol
from srload.fluorescence import IonLevelSystem, P12, evolve_populations, telegraph_dwells
from srload.ionization import (
    LaserSetup,
    expected_time_to_first_ion,
    transit_ionization_probability,
)
from srload.physics import (
    AutoIonizingProfile,
    GaussianBeam,
    TransitionSpec,
    axial_intensity,
    excited_fraction,
    ionization_cross_section,
    saturation_intensity,
)
from srload.source import AtomSample, IsotopeSpec, steady_state_temperature
from srload.streams import spawn_generator

from test_ionization import GEOM, ISO88, LASERS, PROFILE, T461, brute_force_probability


def report(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_acceptance_saturation_intensity():
    value = saturation_intensity(TransitionSpec(461e-9, TWO_PI * 32e6, "461"))
    ok = abs(value - 428.0) / 428.0 <= 0.005
    report("saturation intensity", ok, f"{value:.1f} W/m^2 vs 428 within 0.5%")


def test_acceptance_intensity_arithmetic():
    i1 = axial_intensity(GaussianBeam(5e-6, 70e-6, 461e-9))
    i2 = axial_intensity(GaussianBeam(1.5e-3, 35e-6, 405.2e-9))
    ok = abs(i1 - 325.0) / 325.0 <= 0.01 and abs(i2 - 3.9e5) / 3.9e5 <= 0.01
    report("intensity arithmetic", ok,
           f"{i1:.1f} W/m^2 (325 +-1%), {i2:.3g} W/m^2 (3.9e5 +-1%)")


def test_acceptance_cross_section_profile():
    peak = ionization_cross_section(PROFILE, 405.2e-9)
    half_lo = ionization_cross_section(PROFILE, 405.2e-9 - 0.5e-9)
    half_hi = ionization_cross_section(PROFILE, 405.2e-9 + 0.5e-9)
    ok = (abs(peak - 5600e-22) / 5600e-22 < 1e-12
          and abs(half_lo - 2800e-22) / 2800e-22 < 1e-9
          and abs(half_hi - 2800e-22) / 2800e-22 < 1e-9)
    report("cross-section profile", ok,
           f"peak {peak/1e-22:.1f} Mb, half points {half_lo/1e-22:.4f}/"
           f"{half_hi/1e-22:.4f} Mb")


def test_acceptance_transit_probability_oracle():
    worst = 0.0
    n = 0
    for v in (10.0, 120.0, 450.0, 900.0, 1600.0):
        for off_frac, dmhz in ((0.0, 0.0), (0.5, 120.0), (1.0, -250.0), (1.8, 40.0)):
            lasers = LaserSetup(
                GaussianBeam(5e-6, 70e-6, T461.wavelength, TWO_PI * dmhz * 1e6),
                LASERS.beam_405)
            atom = AtomSample(ISO88, v, np.array([1.0, 0.0, 0.0]), 0.0,
                              off_frac * 70e-6)
            got = transit_ionization_probability(atom, lasers, GEOM, PROFILE, T461)
            want = brute_force_probability(atom, lasers)
            big = max(want, got.probability)
            if big > 1e-12:
                worst = max(worst, abs(got.probability - want) / big)
            else:
                # both sides agree the transit is inert
                assert abs(got.probability - want) < 1e-12
            n += 1
    ok = worst <= 1e-3
    report("transit-probability oracle", ok,
           f"worst relative deviation {worst:.2e} over {n} cases (tol 0.1%)")


def _interp_crossings(x, y, level):
    """x positions where piecewise-linear y crosses `level`."""
    out = []
    for i in range(len(x) - 1):
        y0, y1 = y[i], y[i + 1]
        if (y0 - level) * (y1 - level) < 0:
            out.append(x[i] + (level - y0) * (x[i + 1] - x[i]) / (y1 - y0))
    return out


def test_acceptance_fig3_shape(tmp_path, cfg, rate_model):
    out = tmp_path / "fig3"
    assert cli_main(["fig3", "--out", str(out), "--samples", "1000"]) == 0
    rows = list(csv.DictReader(open(out / "fig3_first_ion_vs_detuning.csv")))
    det = np.array([float(r["detuning_hz"]) for r in rows])
    mean = np.array([math.inf if r["mean_time_s"] == "inf" else float(r["mean_time_s"])
                     for r in rows])
    cens = np.array([int(r["n_censored"]) for r in rows])
    n_runs = int(rows[0]["n_runs"])
    finite = np.isfinite(mean)
    t_min = float(np.min(mean[finite]))
    floor_ok = 15.0 <= t_min <= 25.0
    # effective resonance width from the inverse-time profile
    inv = np.where(finite & (cens < n_runs / 2), 1.0 / np.where(finite, mean, 1.0), 0.0)
    crossings = _interp_crossings(det, inv, float(inv.max()) / 2.0)
    width = (max(crossings) - min(crossings)) if len(crossings) >= 2 else 0.0
    width_ok = 0.5e9 <= width <= 2.0e9
    # censoring at the +-5 GHz grid edges: majority of MC runs censored and
    # the deterministic threshold solver exceeds the horizon
    edge_ok = True
    for d_edge in (-5e9, 5e9):
        idx = int(np.argmin(np.abs(det - d_edge)))
        edge_ok &= cens[idx] > n_runs / 2
        edge_ok &= math.isinf(expected_time_to_first_ion(
            cfg.oven.dissipated_power, TWO_PI * d_edge, rate_model, cfg.oven))
    ok = floor_ok and width_ok and edge_ok
    report("fig3 shape", ok,
           f"floor {t_min:.1f} s (15-25), width {width/1e9:.2f} GHz (0.5-2), "
           f"edges censored={edge_ok}")


def test_acceptance_fig2_shape(tmp_path):
    out = tmp_path / "fig2"
    assert cli_main(["fig2", "--out", str(out), "--samples", "400",
                     "--powers", "0.1,0.7,1.0,2.0,3.0"]) == 0
    rows = list(csv.DictReader(open(out / "fig2_first_ion_vs_power.csv")))
    below = rows[0]
    below_ok = below["mean_time_s"] == "inf" and int(below["n_censored"]) == 400
    means = [float(r["mean_time_s"]) for r in rows[1:]]
    ses = [float(r["stderr_s"]) for r in rows[1:]]
    mono_ok = all(means[i + 1] <= means[i] + 2 * (ses[i] + ses[i + 1])
                  for i in range(len(means) - 1))
    strictly_down = means[-1] < means[0]
    ok = below_ok and mono_ok and strictly_down
    report("fig2 shape", ok,
           f"censored below threshold={below_ok}, monotone within errors={mono_ok}, "
           f"means={['%.1f' % m for m in means]}")


def test_acceptance_isotope_selectivity(cfg, rate_model):
    t_op = steady_state_temperature(cfg.oven)
    rates = rate_model.rates(t_op, cfg.lasers.beam_461.detuning)
    creation = {iso.mass_number: float(r) for iso, r in zip(cfg.isotopes, rates)}
    rng = spawn_generator(cfg.master_seed, "acceptance-isotopes")
    rep = loaded_fraction_report(10_000, creation, cfg.isotopes, cfg.capture_model,
                                 cfg.cooling_detuning_422, rng)
    f88 = rep[88]["fraction"]
    fitted_ok = abs(f88 - 0.92) <= 0.03
    uniform = CaptureModel(1.0, 1.0, 1.0, 0.0)
    rng2 = spawn_generator(cfg.master_seed, "acceptance-isotopes-uniform")
    rep_u = loaded_fraction_report(10_000, creation, cfg.isotopes, uniform,
                                   cfg.cooling_detuning_422, rng2)
    f88_u = rep_u[88]["fraction"]
    ion_weighted = creation[88] / sum(creation.values())
    uniform_ok = abs(f88_u - ion_weighted) <= 0.02 and f88_u >= 0.826
    ok = fitted_ok and uniform_ok
    report("isotope selectivity", ok,
           f"fitted 88 fraction {f88:.3f} (0.92 +-0.03); selectivity-free "
           f"{f88_u:.3f} vs ionization-weighted {ion_weighted:.3f} (>= 0.826)")


def test_acceptance_shelving_statistics(cfg):
    rng = spawn_generator(cfg.master_seed, "acceptance-shelve")
    dark = []
    while len(dark) < 1000:
        dws = telegraph_dwells(cfg.telegraph, 600.0, rng)
        dark += [dw for _, bright, dw in dws[:-1] if not bright]
    dark = np.array(dark[:1000])
    mean_ok = abs(dark.mean() - 0.395) / 0.395 <= 0.05
    ks = stats.kstest(dark, "expon", args=(0, 0.395))
    ks_ok = ks.pvalue > 0.01
    ok = mean_ok and ks_ok
    report("shelving statistics", ok,
           f"mean dark {dark.mean()*1e3:.1f} ms over {len(dark)} periods "
           f"(395 +-5%), KS p={ks.pvalue:.3f} (>0.01)")


def test_acceptance_two_level_reduction():
    gamma = 1.26e8
    worst = 0.0
    for s in (0.2, 0.759, 3.0):
        sys = IonLevelSystem(r_422=0.5 * s * gamma, r_1092=0.0, r_ase_408=0.0,
                             gamma_p12=gamma, p12_branch_s=1.0)
        out = evolve_populations(sys, 2.0)
        worst = max(worst, abs(out.populations[P12] - excited_fraction(s, 0.0, gamma)))
    ok = worst <= 1e-6
    report("two-level reduction", ok, f"worst |deviation| {worst:.2e} (tol 1e-6)")


def _sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


def test_acceptance_determinism(tmp_path, cfg):
    # CLI: identical runs and worker counts give byte-identical data files
    args = ["fig3", "--samples", "120", "--detunings=-1.2e9,-0.65e9,-0.2e9"]
    hashes = []
    for tag, extra in (("a", ["--workers", "1"]), ("b", ["--workers", "1"]),
                       ("c", ["--workers", "4"])):
        out = tmp_path / tag
        assert cli_main(args + ["--out", str(out)] + extra) == 0
        hashes.append(_sha(out / "fig3_first_ion_vs_detuning.csv"))
    cli_ok = hashes[0] == hashes[1] == hashes[2]

    # console session: identical scripted runs give identical logs
    def run_session():
        eng = SessionEngine(cfg, seed=2718)
        eng.apply_command("set_oven_power", {"power_w": 2.0})
        eng.apply_command("set_shutter", {"name": "cooling", "open": True})
        eng.apply_command("set_shutter", {"name": "461", "open": True})
        eng.apply_command("set_shutter", {"name": "405", "open": True})
        eng.apply_command("set_shutter", {"name": "405", "open": False},
                          at_sim_time=30.0)
        eng.advance_to(40.0)
        payload = json.dumps([[e.seq, e.sim_time, e.kind, e.payload]
                              for e in eng.events], sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()

    session_ok = run_session() == run_session()
    ok = cli_ok and session_ok
    report("determinism", ok,
           f"CLI reruns/workers identical={cli_ok}, session replay identical={session_ok}")


def test_acceptance_loading_rate_anchor(cfg, rate_model):
    t_op = steady_state_temperature(cfg.oven)
    model_rate = rate_model.total_rate(t_op, cfg.lasers.beam_461.detuning)
    eng = SessionEngine(cfg, seed=99)
    eng.apply_command("set_oven_power", {"power_w": cfg.oven.dissipated_power})
    eng.apply_command("set_shutter", {"name": "cooling", "open": True})
    eng.advance_to(120.0)
    eng.apply_command("set_shutter", {"name": "461", "open": True})
    eng.apply_command("set_shutter", {"name": "405", "open": True})
    start = eng.sim_time
    window = 180.0
    while eng.sim_time < start + window:
        eng.advance_to(eng.sim_time + 5.0)
        if eng.crystal.size() >= cfg.trap.capacity - 2:
            eng.apply_command("clear_trap")
    captured = sum(1 for e in eng.events if e.kind == "captured")
    rate = captured / window
    ok = 0.5 <= rate <= 5.0 and 0.5 <= model_rate <= 5.0
    report("loading-rate anchor", ok,
           f"captured {rate:.2f} ions/s, model {model_rate:.2f} ions/s (0.5-5)")


@pytest.mark.parametrize("target_n", [1, 3])
def test_acceptance_target_n(cfg, target_n):
    out = run_target_n_protocol(cfg, seed=cfg.master_seed + target_n,
                                target_n=target_n, attempts=100)
    ok = out["success_fraction"] >= 0.9
    report(f"target-N protocol (N={target_n})", ok,
           f"{out['successes']}/100 successes (need >= 90)")
