import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from srload.constants import TWO_PI, CODATA
from srload.physics import (
    AutoIonizingProfile,
    GaussianBeam,
    TransitionSpec,
    axial_intensity,
    excited_fraction,
    ionization_cross_section,
    photoionization_rate,
    saturation_intensity,
    scattering_rate,
)

T461 = TransitionSpec(461e-9, TWO_PI * 32e6, "461")
PROFILE = AutoIonizingProfile(405.2e-9, 1.0e-9, 5600e-22)


class TestSaturationIntensity:
    def test_sr_461_value(self):
        assert saturation_intensity(T461) == pytest.approx(428.0, rel=5e-3)

    def test_linear_in_gamma(self):
        tiny = TransitionSpec(461e-9, 1e-3, "tiny")
        assert saturation_intensity(tiny) == pytest.approx(
            saturation_intensity(T461) * 1e-3 / T461.gamma, rel=1e-12)

    def test_wavelength_doubling_gives_one_eighth(self):
        t922 = TransitionSpec(922e-9, TWO_PI * 32e6, "922")
        assert saturation_intensity(t922) == pytest.approx(
            saturation_intensity(T461) / 8.0, rel=1e-12)

    @given(st.floats(1e-7, 2e-6), st.floats(1e5, 1e9))
    def test_scaling_property(self, wavelength, gamma):
        t = TransitionSpec(wavelength, gamma, "x")
        t_half = TransitionSpec(wavelength, gamma / 2, "x")
        t_double_wl = TransitionSpec(2 * wavelength, gamma, "x")
        assert saturation_intensity(t_half) == pytest.approx(
            saturation_intensity(t) / 2, rel=1e-9)
        assert saturation_intensity(t_double_wl) == pytest.approx(
            saturation_intensity(t) / 8, rel=1e-9)


class TestAxialIntensity:
    def test_5uw_in_140um_spot(self):
        beam = GaussianBeam(5e-6, 70e-6, 461e-9)
        assert axial_intensity(beam) == pytest.approx(325.0, rel=1e-2)

    def test_1p5mw_in_70um_spot(self):
        beam = GaussianBeam(1.5e-3, 35e-6, 405.2e-9)
        assert axial_intensity(beam) == pytest.approx(3.9e5, rel=1e-2)

    def test_zero_power(self):
        assert axial_intensity(GaussianBeam(0.0, 50e-6, 461e-9)) == 0.0

    def test_invalid_beam_rejected(self):
        with pytest.raises(ValueError):
            GaussianBeam(-1e-6, 70e-6, 461e-9)
        with pytest.raises(ValueError):
            GaussianBeam(1e-6, 0.0, 461e-9)


class TestScatteringRate:
    def test_saturation_limit(self):
        assert scattering_rate(1e12, 0.0, T461.gamma) == pytest.approx(
            T461.gamma / 2, rel=1e-6)

    def test_s_equals_one_on_resonance(self):
        assert scattering_rate(1.0, 0.0, T461.gamma) == pytest.approx(
            T461.gamma / 4, rel=1e-12)

    def test_excited_fraction_at_measured_beam_intensity(self):
        # s = 325 / 428 from the measured beam intensity and I_sat
        assert excited_fraction(0.759, 0.0, T461.gamma) == pytest.approx(0.216, abs=1e-3)

    @given(st.floats(0.0, 1e6), st.floats(-1e10, 1e10))
    def test_bounds_and_symmetry(self, s, delta):
        r = scattering_rate(s, delta, T461.gamma)
        assert 0.0 <= r <= T461.gamma / 2 + 1e-9
        assert r == pytest.approx(scattering_rate(s, -delta, T461.gamma), rel=1e-12)
        f = excited_fraction(s, delta, T461.gamma)
        assert 0.0 <= f < 0.5

    @given(st.floats(0.0, 1e3), st.floats(0.0, 1e3), st.floats(-1e9, 1e9))
    def test_monotone_in_s(self, s1, s2, delta):
        lo, hi = sorted((s1, s2))
        assert scattering_rate(lo, delta, T461.gamma) <= \
            scattering_rate(hi, delta, T461.gamma) + 1e-12


class TestCrossSection:
    def test_peak(self):
        assert ionization_cross_section(PROFILE, 405.2e-9) == pytest.approx(
            5600e-22, rel=1e-12)

    def test_half_maximum_at_half_fwhm(self):
        for sign in (+1, -1):
            wl = PROFILE.center_wavelength + sign * PROFILE.fwhm / 2
            assert ionization_cross_section(PROFILE, wl) == pytest.approx(
                0.5 * PROFILE.peak_cross_section, rel=1e-12)

    def test_two_nm_out(self):
        # (lambda - lambda0) = 4 HWHM -> 1/(16+1) of the peak
        wl = PROFILE.center_wavelength + 2.0e-9
        assert ionization_cross_section(PROFILE, wl) == pytest.approx(
            PROFILE.peak_cross_section / 17.0, rel=1e-2)

    @given(st.floats(-5e-9, 5e-9))
    def test_symmetric_and_peaked_at_center(self, off):
        lo = ionization_cross_section(PROFILE, PROFILE.center_wavelength - off)
        hi = ionization_cross_section(PROFILE, PROFILE.center_wavelength + off)
        assert lo == pytest.approx(hi, rel=1e-12)
        assert lo <= PROFILE.peak_cross_section * (1 + 1e-12)


class TestPhotoionizationRate:
    def test_rate_at_measured_405_intensity(self):
        # E_photon at 405.2 nm is 4.90e-19 J
        r = photoionization_rate(5600e-22, 3.9e5, 405.2e-9)
        assert r == pytest.approx(4.5e5, rel=2e-2)

    def test_zero_cross_section(self):
        assert photoionization_rate(0.0, 1e6, 405.2e-9) == 0.0

    def test_linear_in_intensity(self):
        full = photoionization_rate(5600e-22, 3.9e5, 405.2e-9)
        half = photoionization_rate(5600e-22, 1.95e5, 405.2e-9)
        assert half == pytest.approx(full / 2, rel=1e-12)

    @given(st.floats(0, 1e-18), st.floats(0, 1e7))
    def test_bilinear(self, sigma, intensity):
        base = photoionization_rate(sigma, intensity, 405.2e-9)
        assert photoionization_rate(2 * sigma, intensity, 405.2e-9) == pytest.approx(
            2 * base, rel=1e-9, abs=1e-30)
        assert photoionization_rate(sigma, 2 * intensity, 405.2e-9) == pytest.approx(
            2 * base, rel=1e-9, abs=1e-30)


def test_constants_are_positive_and_fixed():
    assert CODATA.planck_h > 0 and CODATA.light_speed_c > 0
    assert CODATA.boltzmann_k > 0 and CODATA.atomic_mass_unit > 0
    with pytest.raises(Exception):
        CODATA.planck_h = 1.0
