"""Physical constants and unit helpers.

All internal quantities are SI.  Frequencies and linewidths are stored as
angular frequencies (rad/s) throughout the package; configuration files use
ordinary frequency (Hz/MHz/GHz) and are converted at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

# CODATA 2018 exact / recommended values
PLANCK_H = 6.62607015e-34        # J s
LIGHT_SPEED_C = 2.99792458e8     # m/s
BOLTZMANN_K = 1.380649e-23       # J/K
ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg

MEGABARN = 1.0e-22               # m^2


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed fundamental constants used by the rate formulas.

    Values are pinned to CODATA defaults and are not user-configurable.
    """

    planck_h: float = PLANCK_H
    light_speed_c: float = LIGHT_SPEED_C
    boltzmann_k: float = BOLTZMANN_K
    atomic_mass_unit: float = ATOMIC_MASS_UNIT

    def __post_init__(self):
        for name in ("planck_h", "light_speed_c", "boltzmann_k", "atomic_mass_unit"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")


CODATA = PhysicalConstants()


def angular(frequency_hz: float) -> float:
    """Ordinary frequency (Hz) -> angular frequency (rad/s)."""
    return TWO_PI * frequency_hz


def ordinary(omega_rad_s: float) -> float:
    """Angular frequency (rad/s) -> ordinary frequency (Hz)."""
    return omega_rad_s / TWO_PI
