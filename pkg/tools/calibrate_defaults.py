#!/usr/bin/env python3
"""Verification of the shipped default calibration.

The oven defaults must satisfy several anchors simultaneously:

  C1. ensemble Doppler FWHM of the collimated beam at the operating
      temperature in [0.5, 2] GHz (~1 GHz target),
  C2. steady-state capture-eligible loading rate at the operating detuning
      around 1 ion/s (inside the 0.5-5 ions/s window, and low enough that a
      50 ms-reaction operator can stop at an exact ion count),
  C3. deterministic time-to-first-ion at the operating detuning ~20 s with
      the floor set by the oven heat-up,
  C4. flat-bottomed loading spectrum: time within 10% of its minimum over
      the central +-250 MHz (50 MHz sweep),
  C5. effective resonance width (FWHM of 1/time) in [0.5, 2] GHz,
  C6. divergence (censoring) below a threshold oven power and far off
      resonance.

Calibration procedure (how the shipped numbers were chosen):

  1. With the beam hard-collimated at the 68 deg crossing, C1 pins the
     steady-state operating temperature: FWHM ~ 1.16 sqrt(2kT/m) cos(68)/lambda,
     so ~1 GHz needs T_ss ~ 7500 K.  This is an *effective* beam
     temperature; the lumped flux factor absorbs the unphysical vapor
     density it implies.  gain = 3600 K/W puts T_ss there at the nominal
     2 W.
  2. C4 vs C3: the spectrum bottom flattens when the Doppler line has
     (nearly) settled by the time loading turns on, and the onset time
     scales with the thermal time constant.  A scan over (tau, rate target)
     gave tau = 32 s with the rate target below.
  3. C2 fixes the flux factor: the deterministic rate model with a unit
     factor gives the conversion at the rate peak; the shipped factor
     targets 1.4 ions/s there (~1.07 ions/s at the operating detuning,
     which is the *time-optimal* point, blue of the steady-state rate peak
     because the line is narrower during warm-up).
  4. The operating detuning is the argmin of the deterministic
     time-to-first-ion sweep: -650 MHz.

Run:  python3 tools/calibrate_defaults.py
"""

import math

import numpy as np

from srload.config import load_config
from srload.constants import TWO_PI
from srload.ionization import expected_time_to_first_ion
from srload.source import IsotopeSpec, doppler_detuning, sample_atoms, \
    steady_state_temperature


def fwhm_of_histogram(values, bins=400):
    hist, edges = np.histogram(values, bins=bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    above = np.where(hist >= hist.max() / 2.0)[0]
    return centers[above[-1]] - centers[above[0]]


def main():
    cfg = load_config()
    t_ss = steady_state_temperature(cfg.oven)
    power = cfg.oven.dissipated_power
    d_op = cfg.lasers.beam_461.detuning
    print(f"operating temperature: {t_ss:.0f} K, detuning {d_op/TWO_PI/1e6:.0f} MHz, "
          f"flux factor {cfg.oven.flux_area_solid_angle_factor:.4e} m^2 sr")

    iso88 = next(i for i in cfg.isotopes if i.mass_number == 88)
    rng = np.random.default_rng(cfg.master_seed)
    atoms = sample_atoms(t_ss, cfg.geometry,
                         [IsotopeSpec(88, iso88.mass, 1.0)], 200_000, rng)
    dop = np.array([doppler_detuning(a, cfg.geometry, cfg.transition_461.wavelength)
                    for a in atoms]) / TWO_PI
    print(f"C1 ensemble Doppler FWHM: {fwhm_of_histogram(dop)/1e9:.3f} GHz (want 0.5-2)")

    model = cfg.rate_model()
    rates = model.rates(t_ss, d_op)
    print("C2 steady rates: "
          + ", ".join(f"{iso.mass_number}: {r:.3f}/s"
                      for iso, r in zip(cfg.isotopes, rates))
          + f"  total {rates.sum():.3f}/s (want 0.5-5)")

    grid = TWO_PI * np.arange(-2.0e9, 0.011e9, 50e6)
    times = np.array([expected_time_to_first_ion(power, float(d), model, cfg.oven)
                      for d in grid])
    i0 = int(np.argmin(times))
    t_min = times[i0]
    print(f"C3 time floor: {t_min:.1f} s at {grid[i0]/TWO_PI/1e6:.0f} MHz (want 15-25)")

    window = np.abs(grid - grid[i0]) <= TWO_PI * 250e6 + 1.0
    flat = float(np.max(times[window]) / t_min) - 1.0
    print(f"C4 flat-bottom deviation over +-250 MHz: {100*flat:.1f} % (want <10)")

    sweep = grid[i0] + TWO_PI * np.linspace(-3.0e9, 3.0e9, 121)
    tv = np.array([expected_time_to_first_ion(power, float(d), model, cfg.oven)
                   for d in sweep])
    inv = np.where(np.isfinite(tv), 1.0 / tv, 0.0)
    above = np.where(inv >= inv.max() / 2)[0]
    eff = (sweep[above[-1]] - sweep[above[0]]) / TWO_PI
    print(f"C5 effective resonance FWHM: {eff/1e9:.2f} GHz (want 0.5-2)")

    print("C6 power scan:")
    for p in (0.1, 0.4, 0.7, 1.0, 2.0, 3.0):
        t = expected_time_to_first_ion(p, d_op, model, cfg.oven, cfg.horizon_s)
        label = "censored" if math.isinf(t) else f"{t:.1f} s"
        print(f"   {p:.1f} W -> {label}")
    for off in (-5e9, 5e9):
        t = expected_time_to_first_ion(power, TWO_PI * off, model, cfg.oven,
                                       cfg.horizon_s)
        label = "censored" if math.isinf(t) else f"{t:.1f} s"
        print(f"   delta = {off/1e9:+.0f} GHz -> {label}")


if __name__ == "__main__":
    main()
