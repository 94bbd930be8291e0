"""Lineshapes and steady-state laser-atom rate formulas.

Conventions used everywhere downstream:

* Linewidths and detunings are angular (rad/s).
* Laser beam intensity uses the average-intensity convention
  I = P / (pi * w0^2) over the 1/e^2 waist, which is the normalization
  that reproduces the measured spot intensities this simulator is
  calibrated against (not the Gaussian peak 2P / (pi * w0^2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import CODATA

__all__ = [
    "TransitionSpec",
    "AutoIonizingProfile",
    "GaussianBeam",
    "saturation_intensity",
    "axial_intensity",
    "scattering_rate",
    "excited_fraction",
    "ionization_cross_section",
    "photoionization_rate",
]


@dataclass(frozen=True)
class TransitionSpec:
    """A dipole transition: vacuum wavelength (m) and natural linewidth (rad/s)."""

    wavelength: float
    gamma: float
    label: str = ""

    def __post_init__(self):
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be > 0")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be > 0")


@dataclass(frozen=True)
class AutoIonizingProfile:
    """Lorentzian ionization cross-section profile of an auto-ionizing level.

    The profile is parametrized by its center wavelength (m), full width at
    half maximum (m) and peak cross section (m^2).
    """

    center_wavelength: float
    fwhm: float
    peak_cross_section: float

    def __post_init__(self):
        if self.center_wavelength <= 0.0:
            raise ValueError("center_wavelength must be > 0")
        if self.fwhm <= 0.0:
            raise ValueError("fwhm must be > 0")
        if self.peak_cross_section <= 0.0:
            raise ValueError("peak_cross_section must be > 0")


@dataclass(frozen=True)
class GaussianBeam:
    """A Gaussian laser beam characterized at its focus.

    power : W
    waist_w0 : 1/e^2 intensity radius (m)
    wavelength : vacuum wavelength (m)
    detuning : angular detuning (rad/s) from the configured reference resonance
    """

    power: float
    waist_w0: float
    wavelength: float
    detuning: float = 0.0

    def __post_init__(self):
        if self.power < 0.0:
            raise ValueError("power must be >= 0")
        if self.waist_w0 <= 0.0:
            raise ValueError("waist_w0 must be > 0")
        if self.wavelength <= 0.0:
            raise ValueError("wavelength must be > 0")


def saturation_intensity(t: TransitionSpec) -> float:
    """Two-level saturation intensity (pi/3) h c Gamma / lambda^3 in W/m^2."""
    return (math.pi / 3.0) * CODATA.planck_h * CODATA.light_speed_c * t.gamma / t.wavelength**3


def axial_intensity(b: GaussianBeam) -> float:
    """On-axis intensity P / (pi w0^2) in W/m^2 (average-intensity convention)."""
    return b.power / (math.pi * b.waist_w0**2)


def scattering_rate(s, delta, gamma):
    """Steady-state two-level photon scattering rate (photons/s).

    rate = (Gamma/2) * s / (1 + s + (2 delta / Gamma)^2)

    ``s`` is the saturation parameter I/I_sat, ``delta`` and ``gamma`` are
    angular (rad/s).  Accepts scalars or numpy arrays.
    """
    s = np.asarray(s, dtype=float)
    d = 2.0 * np.asarray(delta, dtype=float) / gamma
    out = 0.5 * gamma * s / (1.0 + s + d * d)
    return out if out.ndim else float(out)


def excited_fraction(s, delta, gamma):
    """Steady-state excited-state population (s/2) / (1 + s + (2 delta/Gamma)^2)."""
    s = np.asarray(s, dtype=float)
    d = 2.0 * np.asarray(delta, dtype=float) / gamma
    out = 0.5 * s / (1.0 + s + d * d)
    return out if out.ndim else float(out)


def ionization_cross_section(p: AutoIonizingProfile, wavelength):
    """Lorentzian cross section sigma(lambda) in m^2.

    sigma = sigma_peak * (FWHM/2)^2 / ((lambda - lambda0)^2 + (FWHM/2)^2)
    """
    wl = np.asarray(wavelength, dtype=float)
    if np.any(wl <= 0.0):
        raise ValueError("wavelength must be > 0")
    hw = 0.5 * p.fwhm
    out = p.peak_cross_section * hw * hw / ((wl - p.center_wavelength) ** 2 + hw * hw)
    return out if out.ndim else float(out)


def photoionization_rate(sigma, intensity, wavelength):
    """Photoionization rate sigma * I / E_photon = sigma * I * lambda / (h c) in 1/s."""
    sigma = np.asarray(sigma, dtype=float)
    intensity = np.asarray(intensity, dtype=float)
    if np.any(sigma < 0.0) or np.any(intensity < 0.0) or np.any(np.asarray(wavelength) < 0.0):
        raise ValueError("sigma, intensity and wavelength must be >= 0")
    out = sigma * intensity * wavelength / (CODATA.planck_h * CODATA.light_speed_c)
    return out if out.ndim else float(out)
