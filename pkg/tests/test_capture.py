import math

import numpy as np
import pytest

from srload.capture import (
    CaptureModel,
    CoolingClass,
    IonCrystal,
    TrapConfig,
    capture,
    classify_cooling,
    loaded_fraction_report,
)
from srload.constants import ATOMIC_MASS_UNIT, TWO_PI
from srload.source import IsotopeSpec, steady_state_temperature
from srload.streams import spawn_generator

M = ATOMIC_MASS_UNIT
ISO88 = IsotopeSpec(88, 87.9056122 * M, 0.8301507537688442, 0.0, 0.0)
ISO86 = IsotopeSpec(86, 85.9092602 * M, 0.09949748743718594,
                    -TWO_PI * 124.8e6, -TWO_PI * 570e6)
ISO87 = IsotopeSpec(87, 86.9088774 * M, 0.07035175879396985,
                    -TWO_PI * 46.5e6, TWO_PI * 2.5e9)
COOL_DET = -TWO_PI * 200e6


class TestClassifyCooling:
    def test_88_is_cooled_at_minus_200mhz(self):
        assert classify_cooling(ISO88, COOL_DET) is CoolingClass.COOLED

    def test_86_is_heated(self):
        # -200 MHz of the 88 line is +370 MHz blue of the 86 line
        assert classify_cooling(ISO86, COOL_DET) is CoolingClass.HEATED

    def test_87_is_uncoupled(self):
        assert classify_cooling(ISO87, COOL_DET) is CoolingClass.UNCOUPLED

    def test_sign_rule_exhaustive(self):
        threshold = TWO_PI * 1.5e9
        for shift_mhz in np.linspace(-1200, 1200, 25):
            for det_mhz in np.linspace(-1200, 1200, 25):
                iso = IsotopeSpec(86, ISO86.mass, 1.0, 0.0, TWO_PI * shift_mhz * 1e6)
                eff = TWO_PI * (det_mhz - shift_mhz) * 1e6
                got = classify_cooling(iso, TWO_PI * det_mhz * 1e6, threshold)
                if abs(eff) >= threshold:
                    assert got is CoolingClass.UNCOUPLED
                elif eff < 0:
                    assert got is CoolingClass.COOLED
                else:
                    assert got is CoolingClass.HEATED


class TestCaptureModel:
    def test_probability_ordering_enforced(self):
        with pytest.raises(ValueError):
            CaptureModel(p_cooled=0.5, p_uncooled=0.9, p_heated_alone=0.1)

    def test_certain_capture(self):
        model = CaptureModel(p_cooled=1.0, p_uncooled=0.5, p_heated_alone=0.1,
                             sympathetic_gain=0.0)
        crystal = IonCrystal(capacity=5)
        ok, reason = capture(ISO88, CoolingClass.COOLED, crystal, model,
                             spawn_generator(1, "c"))
        assert ok and reason == "" and crystal.size() == 1

    def test_zero_probability_heated_alone(self):
        model = CaptureModel(p_cooled=1.0, p_uncooled=0.5, p_heated_alone=0.0,
                             sympathetic_gain=0.0)
        crystal = IonCrystal(capacity=5)
        rng = spawn_generator(2, "c")
        for _ in range(200):
            ok, _ = capture(ISO86, CoolingClass.HEATED, crystal, model, rng)
            assert not ok
        assert crystal.size() == 0
        assert crystal.created_total[86] == 200

    def test_full_trap_rejects(self):
        model = CaptureModel(p_cooled=1.0, p_uncooled=1.0, p_heated_alone=1.0,
                             sympathetic_gain=0.0)
        crystal = IonCrystal(capacity=2)
        rng = spawn_generator(3, "c")
        capture(ISO88, CoolingClass.COOLED, crystal, model, rng)
        capture(ISO88, CoolingClass.COOLED, crystal, model, rng)
        ok, reason = capture(ISO88, CoolingClass.COOLED, crystal, model, rng)
        assert not ok and reason == "full"
        assert crystal.size() == 2

    def test_sympathetic_term_only_for_uncooled_classes(self):
        model = CaptureModel(p_cooled=0.9, p_uncooled=0.5, p_heated_alone=0.1,
                             sympathetic_gain=0.25)
        assert model.probability(CoolingClass.COOLED, 3) == 0.9
        assert model.probability(CoolingClass.HEATED, 2) == pytest.approx(0.6)
        assert model.probability(CoolingClass.HEATED, 10) == 1.0

    def test_clear_preserves_counters(self):
        crystal = IonCrystal(capacity=3)
        model = CaptureModel(p_cooled=1.0, p_uncooled=1.0, p_heated_alone=1.0)
        capture(ISO88, CoolingClass.COOLED, crystal, model, spawn_generator(4, "c"))
        crystal.clear()
        assert crystal.size() == 0
        assert crystal.created_total[88] == 1


def creation_rates(cfg, rate_model):
    t_op = steady_state_temperature(cfg.oven)
    rates = rate_model.rates(t_op, cfg.lasers.beam_461.detuning)
    return {iso.mass_number: float(r) for iso, r in zip(cfg.isotopes, rates)}


class TestLoadedFractions:
    def test_default_model_hits_92_percent(self, cfg, rate_model):
        rng = spawn_generator(cfg.master_seed, "fractions")
        report = loaded_fraction_report(10_000, creation_rates(cfg, rate_model),
                                        cfg.isotopes, cfg.capture_model,
                                        cfg.cooling_detuning_422, rng)
        assert report[88]["fraction"] == pytest.approx(0.92, abs=0.03)
        assert sum(r["fraction"] for r in report.values()) == pytest.approx(1.0, abs=1e-12)

    def test_uniform_model_reverts_to_creation_fractions(self, cfg, rate_model):
        rates = creation_rates(cfg, rate_model)
        uniform = CaptureModel(p_cooled=1.0, p_uncooled=1.0, p_heated_alone=1.0,
                               sympathetic_gain=0.0)
        rng = spawn_generator(7, "uniform")
        report = loaded_fraction_report(20_000, rates, cfg.isotopes, uniform,
                                        cfg.cooling_detuning_422, rng)
        expected = rates[88] / sum(rates.values())
        assert report[88]["fraction"] == pytest.approx(expected, abs=0.01)
        assert report[88]["fraction"] >= 0.826

    def test_no_sympathetic_no_heated_kills_86(self, cfg, rate_model):
        model = CaptureModel(p_cooled=0.98, p_uncooled=0.857, p_heated_alone=0.0,
                             sympathetic_gain=0.0)
        rng = spawn_generator(8, "dead86")
        report = loaded_fraction_report(5_000, creation_rates(cfg, rate_model),
                                        cfg.isotopes, model,
                                        cfg.cooling_detuning_422, rng)
        assert report[86]["fraction"] == 0.0

    def test_sympathetic_gain_monotonically_helps_86(self, cfg, rate_model):
        rates = creation_rates(cfg, rate_model)
        fractions = []
        for gain in (0.0, 0.3, 0.8):
            model = CaptureModel(p_cooled=0.98, p_uncooled=0.857,
                                 p_heated_alone=0.214, sympathetic_gain=gain)
            rng = spawn_generator(9, "sym")  # common random numbers
            report = loaded_fraction_report(4_000, rates, cfg.isotopes, model,
                                            cfg.cooling_detuning_422, rng,
                                            ions_per_run=4)
            fractions.append(report[86]["fraction"])
        assert fractions[0] <= fractions[1] + 1e-9
        assert fractions[1] <= fractions[2] + 1e-9

    def test_confidence_intervals_bracket_fraction(self, cfg, rate_model):
        rng = spawn_generator(10, "ci")
        report = loaded_fraction_report(2_000, creation_rates(cfg, rate_model),
                                        cfg.isotopes, cfg.capture_model,
                                        cfg.cooling_detuning_422, rng)
        for r in report.values():
            assert r["ci_low"] <= r["fraction"] <= r["ci_high"]


def test_trap_config_validation():
    with pytest.raises(ValueError):
        TrapConfig(omega_radial=-1.0)
    with pytest.raises(ValueError):
        TrapConfig(capacity=0)
    trap = TrapConfig()
    assert trap.omega_radial == pytest.approx(TWO_PI * 2e6)
    assert trap.omega_axial == pytest.approx(TWO_PI * 400e3)
