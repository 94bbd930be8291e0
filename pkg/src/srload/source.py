"""Oven thermal ramp, effusive-beam flux, and velocity/direction sampling.

Coordinate frame used by the whole simulator:

* the atomic beam travels along +x,
* the (overlapped) photoionization lasers lie in the x-y plane, crossing the
  atomic beam at ``BeamGeometry.laser_beam_angle``,
* z is vertical.

The direction *toward the laser source* is u = (cos(angle), sin(angle), 0),
so an atom moving down the beam axis approaches the laser at the crossing
angle and sees a positive (blue) Doppler shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import BOLTZMANN_K, TWO_PI

__all__ = [
    "OvenConfig",
    "BeamGeometry",
    "IsotopeSpec",
    "AtomSample",
    "oven_temperature",
    "steady_state_temperature",
    "vapor_pressure",
    "mean_thermal_speed",
    "beam_flux",
    "sample_atoms",
    "doppler_detuning",
    "validate_isotopes",
]

# Log-pressure exponent below which the vapor pressure is treated as zero.
_LOG10_P_FLOOR = -290.0


@dataclass(frozen=True)
class OvenConfig:
    """Resistively heated oven with a first-order thermal lag.

    The steady-state temperature is ambient + gain * power.  The beam-flux
    normalization is lumped into ``flux_area_solid_angle_factor`` (m^2 sr),
    which absorbs aperture area, solid angle and any effective-geometry
    calibration; see the shipped default config for the calibrated value.

    Vapor pressure follows log10(p/Pa) = vapor_a - vapor_b / T.  The default
    coefficients are a two-point fit to standard strontium vapor-pressure
    tables (1 Pa at 796 K, 1 kPa at 1139 K).
    """

    dissipated_power: float          # W
    thermal_time_constant: float     # s
    ambient_temperature: float       # K
    power_to_temperature_gain: float  # K/W
    flux_area_solid_angle_factor: float  # m^2 sr
    vapor_a: float = 9.962
    vapor_b: float = 7929.0          # K

    def __post_init__(self):
        for name in ("dissipated_power", "thermal_time_constant", "ambient_temperature",
                     "power_to_temperature_gain", "flux_area_solid_angle_factor"):
            if getattr(self, name) <= 0.0 and name != "dissipated_power":
                raise ValueError(f"{name} must be > 0")
        if self.dissipated_power < 0.0:
            raise ValueError("dissipated_power must be >= 0")


@dataclass(frozen=True)
class BeamGeometry:
    """Crossing geometry of the lasers and the collimated atomic beam.

    laser_beam_angle : rad, angle between the atomic beam axis and the laser
        axis (68 deg nominal).
    collimation_half_angle : rad, half-angle of the hard collimation cone set
        by the trap electrodes (~1 deg from the ~2 deg full angle).
    interaction_length : m, length of the capture-eligible segment of the
        atomic beam around the trap center.
    source_half_width : m, transverse half-width over which atom trajectories
        are offset from the laser axis when sampling transits.
    """

    laser_beam_angle: float
    collimation_half_angle: float
    interaction_length: float = 2.0e-3
    source_half_width: float = 1.4e-4

    def __post_init__(self):
        if not 0.0 < self.laser_beam_angle < math.pi:
            raise ValueError("laser_beam_angle must be in (0, pi)")
        if self.collimation_half_angle <= 0.0:
            raise ValueError("collimation_half_angle must be > 0")
        if self.interaction_length <= 0.0 or self.source_half_width <= 0.0:
            raise ValueError("interaction_length and source_half_width must be > 0")

    def toward_laser_unit(self) -> np.ndarray:
        """Unit vector pointing from the trap toward the laser source."""
        return np.array([math.cos(self.laser_beam_angle), math.sin(self.laser_beam_angle), 0.0])


@dataclass(frozen=True)
class IsotopeSpec:
    """Per-isotope mass, abundance and isotope shifts.

    Shifts are angular (rad/s), relative to the 88 isotope: ``shift_461`` for
    the neutral 461 nm line and ``shift_422_ion`` for the ionic 422 nm line.
    """

    mass_number: int
    mass: float          # kg
    abundance: float
    shift_461: float = 0.0
    shift_422_ion: float = 0.0

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("mass must be > 0")
        if not 0.0 <= self.abundance <= 1.0:
            raise ValueError("abundance must be in [0, 1]")


@dataclass(frozen=True)
class AtomSample:
    """One atom drawn from the collimated effusive beam.

    ``direction`` is a unit vector within the collimation cone of +x;
    ``offset`` is the vertical (z) displacement of the trajectory from the
    laser axis, which sets the impact parameter of the transit.
    """

    isotope: IsotopeSpec
    speed: float         # m/s
    direction: np.ndarray
    birth_time: float = 0.0
    offset: float = 0.0  # m

    def velocity(self) -> np.ndarray:
        return self.speed * self.direction


def validate_isotopes(isotopes: list[IsotopeSpec]) -> None:
    """Check the consistency constraints on a configured isotope set."""
    total = sum(iso.abundance for iso in isotopes)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"isotope abundances sum to {total!r}, expected 1 within 1e-9")
    for iso in isotopes:
        if iso.mass_number == 86 and iso.shift_422_ion > -TWO_PI * 200e6:
            raise ValueError(
                "86Sr+ 422 nm resonance must sit more than 2*pi*200 MHz red of 88Sr+"
            )


def oven_temperature(cfg: OvenConfig, t) -> float:
    """Oven temperature (K) at time t after the heater current is applied.

    First-order lag: T(t) = T_amb + gain * P * (1 - exp(-t / tau)).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("t must be >= 0")
    rise = 1.0 - np.exp(-t / cfg.thermal_time_constant)
    out = cfg.ambient_temperature + cfg.power_to_temperature_gain * cfg.dissipated_power * rise
    return out if out.ndim else float(out)


def steady_state_temperature(cfg: OvenConfig) -> float:
    return cfg.ambient_temperature + cfg.power_to_temperature_gain * cfg.dissipated_power


def vapor_pressure(cfg: OvenConfig, temperature) -> float:
    """Strontium vapor pressure (Pa); 0 when the law underflows."""
    T = np.asarray(temperature, dtype=float)
    if np.any(T <= 0.0):
        raise ValueError("temperature must be > 0")
    log10p = cfg.vapor_a - cfg.vapor_b / T
    out = np.where(log10p < _LOG10_P_FLOOR, 0.0, np.power(10.0, np.maximum(log10p, _LOG10_P_FLOOR)))
    return out if out.ndim else float(out)


def mean_thermal_speed(temperature: float, mass: float) -> float:
    """Mean speed sqrt(8 k T / (pi m)) of a thermal gas (m/s)."""
    return math.sqrt(8.0 * BOLTZMANN_K * temperature / (math.pi * mass))


def beam_flux(temperature, cfg: OvenConfig, iso: IsotopeSpec):
    """Effusive-beam flux (atoms/s) of one isotope into the interaction region.

    flux = abundance * factor * n_vapor(T) * vbar(T) with the oven vapor
    density n = p / (k T) and the per-isotope mean thermal speed.
    """
    T = np.asarray(temperature, dtype=float)
    p = vapor_pressure(cfg, T)
    n = p / (BOLTZMANN_K * T)
    vbar = np.sqrt(8.0 * BOLTZMANN_K * T / (math.pi * iso.mass))
    out = iso.abundance * cfg.flux_area_solid_angle_factor * n * vbar
    return out if np.ndim(out) else float(out)


def _pick_isotopes(isotopes: list[IsotopeSpec], n: int, rng: np.random.Generator) -> np.ndarray:
    weights = np.array([iso.abundance for iso in isotopes])
    weights = weights / weights.sum()
    return rng.choice(len(isotopes), size=n, p=weights)


def sample_atoms(temperature: float, geom: BeamGeometry, isotopes: list[IsotopeSpec],
                 n: int, rng: np.random.Generator, birth_time: float = 0.0) -> list[AtomSample]:
    """Draw ``n`` atoms from the collimated beam at oven temperature T.

    Speeds follow the effusive flux-weighted distribution
    f(v) ~ v^3 exp(-m v^2 / (2 k T)); directions are uniform over the
    collimation cone; vertical offsets are uniform over
    [-source_half_width, +source_half_width].
    """
    idx = _pick_isotopes(isotopes, n, rng)
    # v^2 ~ Gamma(shape=2, scale=2kT/m)  =>  f(v) ~ v^3 exp(-m v^2 / 2kT)
    scales = np.array([2.0 * BOLTZMANN_K * temperature / isotopes[i].mass for i in idx])
    speeds = np.sqrt(rng.gamma(2.0, scales))
    cos_min = math.cos(geom.collimation_half_angle)
    cos_t = rng.uniform(cos_min, 1.0, size=n)
    sin_t = np.sqrt(1.0 - cos_t**2)
    phi = rng.uniform(0.0, TWO_PI, size=n)
    dirs = np.stack([cos_t, sin_t * np.cos(phi), sin_t * np.sin(phi)], axis=1)
    offsets = rng.uniform(-geom.source_half_width, geom.source_half_width, size=n)
    return [
        AtomSample(isotope=isotopes[idx[k]], speed=float(speeds[k]), direction=dirs[k],
                   birth_time=birth_time, offset=float(offsets[k]))
        for k in range(n)
    ]


def sample_speeds(temperature: float, mass: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Speeds only, from f(v) ~ v^3 exp(-m v^2 / 2kT); used by the rate model."""
    scale = 2.0 * BOLTZMANN_K * temperature / mass
    return np.sqrt(rng.gamma(2.0, scale, size=n))


def doppler_detuning(a: AtomSample, geom: BeamGeometry, laser_wavelength: float) -> float:
    """Angular Doppler shift (rad/s) of the laser as seen by the atom.

    delta_D = 2 pi (v . u) / lambda with u the unit vector toward the laser
    source: positive (blue) for an atom moving toward the laser.
    """
    u = geom.toward_laser_unit()
    v_toward = a.speed * float(a.direction @ u)
    return TWO_PI * v_toward / laser_wavelength
