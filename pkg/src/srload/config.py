"""Configuration loading, strict validation, and assembly of domain objects.

The configuration is a single YAML tree; every key carries its unit in the
name and unknown keys are rejected with the full path in the error message.
Ordinary frequencies (MHz/GHz) are converted to angular rad/s here, at the
boundary, and nowhere else.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
import math
from dataclasses import dataclass, field

import yaml

from .capture import CaptureModel, TrapConfig
from .constants import ATOMIC_MASS_UNIT, TWO_PI
from .fluorescence import IonLevelSystem, TelegraphParams
from .ionization import LaserSetup, LoadingRateModel
from .physics import AutoIonizingProfile, GaussianBeam, TransitionSpec, excited_fraction, \
    axial_intensity, ionization_cross_section, photoionization_rate, saturation_intensity
from .source import BeamGeometry, IsotopeSpec, OvenConfig, validate_isotopes

__all__ = ["ConfigError", "SimConfig", "load_config", "default_config_text", "config_hash"]


class ConfigError(ValueError):
    """Configuration rejected; the message carries the offending key path."""


def default_config_text() -> str:
    return (importlib.resources.files("srload") / "data" / "default_config.yaml").read_text()


class _Node:
    """Strict mapping walker that tracks consumed keys and key paths."""

    def __init__(self, data: dict, path: str = ""):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or '<root>'}: expected a mapping")
        self.data = data
        self.path = path
        self.seen: set[str] = set()

    def _child_path(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def get(self, key: str, kind, required: bool = True, default=None):
        if key not in self.data:
            if required:
                raise ConfigError(f"missing key: {self._child_path(key)}")
            return default
        self.seen.add(key)
        value = self.data[key]
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{self._child_path(key)}: expected a number")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{self._child_path(key)}: expected an integer")
            return value
        if kind is str:
            if not isinstance(value, str):
                raise ConfigError(f"{self._child_path(key)}: expected a string")
            return value
        raise TypeError(f"unsupported kind {kind!r}")

    def node(self, key: str) -> "_Node":
        if key not in self.data:
            raise ConfigError(f"missing key: {self._child_path(key)}")
        self.seen.add(key)
        return _Node(self.data[key], self._child_path(key))

    def list_of_nodes(self, key: str) -> list["_Node"]:
        if key not in self.data:
            raise ConfigError(f"missing key: {self._child_path(key)}")
        self.seen.add(key)
        raw = self.data[key]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{self._child_path(key)}: expected a nonempty list")
        return [_Node(item, f"{self._child_path(key)}[{i}]") for i, item in enumerate(raw)]

    def finish(self) -> None:
        unknown = set(self.data) - self.seen
        if unknown:
            key = sorted(unknown)[0]
            raise ConfigError(f"unknown key: {self._child_path(key)}")


@dataclass
class SimConfig:
    """Validated configuration tree plus the assembled domain objects."""

    master_seed: int
    mc_samples: int
    horizon_s: float
    tick_s: float
    fluorescence_bin_s: float
    oven: OvenConfig
    geometry: BeamGeometry
    isotopes: list[IsotopeSpec]
    transition_461: TransitionSpec
    profile_405: AutoIonizingProfile
    lasers: LaserSetup
    frequency_zero_hz: float
    cooling_detuning_422: float
    cooling_far_threshold: float
    capture_model: CaptureModel
    trap: TrapConfig
    telegraph: TelegraphParams
    level_system: IonLevelSystem
    ase_shelving_rate_per_w: float
    raw: dict = field(repr=False, default_factory=dict)

    def isotope(self, mass_number: int) -> IsotopeSpec:
        for iso in self.isotopes:
            if iso.mass_number == mass_number:
                return iso
        raise KeyError(mass_number)

    def rate_model(self, lasers: LaserSetup | None = None, **kwargs) -> LoadingRateModel:
        return LoadingRateModel(self.isotopes, lasers or self.lasers, self.geometry,
                                self.profile_405, self.transition_461, self.oven, **kwargs)

    def engine_rate_model(self) -> LoadingRateModel:
        """Shared wide-span rate model for interactive sessions (memoized).

        The transit table does not depend on shutters or detuning, so all
        sessions over this config can share one instance; the detuning span
        covers the console's settable range.
        """
        model = getattr(self, "_engine_model", None)
        if model is None:
            span = (-TWO_PI * 8e9, TWO_PI * 8e9)
            model = self.rate_model(delta_span=span, t_max=16000.0)
            object.__setattr__(self, "_engine_model", model)
        return model

    def shelving_rate(self, power_405_w: float) -> float:
        return self.ase_shelving_rate_per_w * power_405_w


def _parse(data: dict) -> SimConfig:
    root = _Node(data)

    sim = root.node("sim")
    master_seed = sim.get("master_seed", int)
    mc_samples = sim.get("mc_samples", int)
    horizon_s = sim.get("horizon_s", float)
    tick_s = sim.get("tick_s", float)
    bin_s = sim.get("fluorescence_bin_s", float)
    sim.finish()
    if mc_samples < 1:
        raise ConfigError("sim.mc_samples: must be >= 1")
    if not horizon_s > 0 or not tick_s > 0 or not bin_s > 0:
        raise ConfigError("sim: horizon_s, tick_s and fluorescence_bin_s must be > 0")

    ov = root.node("oven")
    vp = ov.node("vapor_pressure")
    vapor_a = vp.get("a", float)
    vapor_b = vp.get("b_k", float)
    vp.finish()
    try:
        oven = OvenConfig(
            dissipated_power=ov.get("dissipated_power_w", float),
            thermal_time_constant=ov.get("thermal_time_constant_s", float),
            ambient_temperature=ov.get("ambient_temperature_k", float),
            power_to_temperature_gain=ov.get("power_to_temperature_gain_k_per_w", float),
            flux_area_solid_angle_factor=ov.get("flux_area_solid_angle_factor_m2_sr", float),
            vapor_a=vapor_a, vapor_b=vapor_b)
    except ValueError as exc:
        raise ConfigError(f"oven: {exc}") from exc
    ov.finish()

    ge = root.node("geometry")
    try:
        geometry = BeamGeometry(
            laser_beam_angle=math.radians(ge.get("laser_beam_angle_deg", float)),
            collimation_half_angle=math.radians(ge.get("collimation_half_angle_deg", float)),
            interaction_length=ge.get("interaction_length_mm", float) * 1e-3,
            source_half_width=ge.get("source_half_width_um", float) * 1e-6)
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc
    ge.finish()

    isotopes = []
    for node in root.list_of_nodes("isotopes"):
        try:
            isotopes.append(IsotopeSpec(
                mass_number=node.get("mass_number", int),
                mass=node.get("mass_u", float) * ATOMIC_MASS_UNIT,
                abundance=node.get("abundance", float),
                shift_461=TWO_PI * node.get("shift_461_mhz", float) * 1e6,
                shift_422_ion=TWO_PI * node.get("shift_422_ion_mhz", float) * 1e6))
        except ValueError as exc:
            raise ConfigError(f"{node.path}: {exc}") from exc
        node.finish()
    try:
        validate_isotopes(isotopes)
    except ValueError as exc:
        raise ConfigError(f"isotopes: {exc}") from exc

    tr = root.node("transition_461")
    try:
        t461 = TransitionSpec(
            wavelength=tr.get("wavelength_nm", float) * 1e-9,
            gamma=TWO_PI * tr.get("linewidth_mhz", float) * 1e6,
            label="Sr 461")
    except ValueError as exc:
        raise ConfigError(f"transition_461: {exc}") from exc
    tr.finish()

    ai = root.node("autoionizing_405")
    try:
        profile = AutoIonizingProfile(
            center_wavelength=ai.get("center_wavelength_nm", float) * 1e-9,
            fwhm=ai.get("fwhm_nm", float) * 1e-9,
            peak_cross_section=ai.get("peak_cross_section_mb", float) * 1e-22)
    except ValueError as exc:
        raise ConfigError(f"autoionizing_405: {exc}") from exc
    ai.finish()

    la = root.node("lasers")
    b461 = la.node("beam_461")
    b405 = la.node("beam_405")
    try:
        beam_461 = GaussianBeam(
            power=b461.get("power_uw", float) * 1e-6,
            waist_w0=b461.get("waist_um", float) * 1e-6,
            wavelength=t461.wavelength,
            detuning=TWO_PI * b461.get("detuning_mhz", float) * 1e6)
        beam_405 = GaussianBeam(
            power=b405.get("power_mw", float) * 1e-3,
            waist_w0=b405.get("waist_um", float) * 1e-6,
            wavelength=b405.get("wavelength_nm", float) * 1e-9)
    except ValueError as exc:
        raise ConfigError(f"lasers: {exc}") from exc
    b461.finish()
    b405.finish()
    frequency_zero = la.get("frequency_zero_ghz", float) * 1e9
    la.finish()
    lasers = LaserSetup(beam_461, beam_405)

    co = root.node("cooling_422")
    cooling_detuning = TWO_PI * co.get("detuning_mhz", float) * 1e6
    far_threshold = TWO_PI * co.get("far_resonance_threshold_mhz", float) * 1e6
    co.finish()
    if far_threshold <= 0:
        raise ConfigError("cooling_422.far_resonance_threshold_mhz: must be > 0")

    ca = root.node("capture")
    try:
        capture_model = CaptureModel(
            p_cooled=ca.get("p_cooled", float),
            p_uncooled=ca.get("p_uncooled", float),
            p_heated_alone=ca.get("p_heated_alone", float),
            sympathetic_gain=ca.get("sympathetic_gain", float))
    except ValueError as exc:
        raise ConfigError(f"capture: {exc}") from exc
    ca.finish()

    tp = root.node("trap")
    try:
        trap = TrapConfig(
            omega_radial=TWO_PI * tp.get("omega_radial_mhz", float) * 1e6,
            omega_axial=TWO_PI * tp.get("omega_axial_khz", float) * 1e3,
            capacity=tp.get("capacity", int))
    except ValueError as exc:
        raise ConfigError(f"trap: {exc}") from exc
    tp.finish()

    fl = root.node("fluorescence")
    lv = fl.node("ion_levels")
    d52_lifetime = fl.get("d52_lifetime_s", float)
    try:
        level_system = IonLevelSystem(
            gamma_p12=lv.get("p12_decay_rate_per_s", float),
            p12_branch_s=lv.get("p12_branch_to_s", float),
            gamma_p32=lv.get("p32_decay_rate_per_s", float),
            p32_branch_s=lv.get("p32_branch_to_s", float),
            p32_branch_d32=lv.get("p32_branch_to_d32", float),
            tau_d52=d52_lifetime,
            tau_d32=lv.get("d32_lifetime_s", float))
    except ValueError as exc:
        raise ConfigError(f"fluorescence.ion_levels: {exc}") from exc
    lv.finish()
    shelving_per_mw = fl.get("ase_shelving_rate_per_mw", float)
    try:
        telegraph = TelegraphParams(
            shelving_rate=shelving_per_mw * beam_405.power * 1e3,
            deshelving_rate=1.0 / d52_lifetime,
            bright_scatter_rate=fl.get("bright_scatter_rate_hz", float),
            collection_efficiency=fl.get("collection_efficiency", float),
            dark_count_rate=fl.get("dark_count_rate_hz", float))
    except ValueError as exc:
        raise ConfigError(f"fluorescence: {exc}") from exc
    fl.finish()

    root.finish()

    cfg = SimConfig(
        master_seed=master_seed, mc_samples=mc_samples, horizon_s=horizon_s,
        tick_s=tick_s, fluorescence_bin_s=bin_s, oven=oven, geometry=geometry,
        isotopes=isotopes, transition_461=t461, profile_405=profile, lasers=lasers,
        frequency_zero_hz=frequency_zero, cooling_detuning_422=cooling_detuning,
        cooling_far_threshold=far_threshold, capture_model=capture_model, trap=trap,
        telegraph=telegraph, level_system=level_system,
        ase_shelving_rate_per_w=shelving_per_mw * 1e3, raw=data)
    _check_model_validity(cfg)
    return cfg


def _check_model_validity(cfg: SimConfig) -> None:
    """Separation-of-time-scales checks behind the steady-state transit model.

    The transit time across the 461 nm waist must exceed the excited-state
    lifetime by a wide margin, and peak ionization must not deplete the
    excited state faster than spontaneous decay refills it.
    """
    gamma = cfg.transition_461.gamma
    # characteristic atom at the operating point
    from .constants import BOLTZMANN_K
    from .source import steady_state_temperature
    t_op = steady_state_temperature(cfg.oven)
    v_char = math.sqrt(2.0 * BOLTZMANN_K * t_op / min(i.mass for i in cfg.isotopes))
    transit = 2.0 * cfg.lasers.beam_461.waist_w0 / (v_char * math.sin(cfg.geometry.laser_beam_angle))
    if transit * gamma < 20.0:
        raise ConfigError(
            f"characteristic transit time {transit:.2e} s is not >> 1/Gamma; "
            "steady-state excitation model invalid")
    sigma = ionization_cross_section(cfg.profile_405, cfg.lasers.beam_405.wavelength)
    r_ion = photoionization_rate(sigma, axial_intensity(cfg.lasers.beam_405),
                                 cfg.lasers.beam_405.wavelength)
    if r_ion > 0.05 * gamma:
        raise ConfigError(
            f"peak ionization rate {r_ion:.3e}/s depletes the excited state "
            f"(> 5% of Gamma = {gamma:.3e}/s)")


def load_config(path: str | None = None, text: str | None = None) -> SimConfig:
    """Load and validate a configuration; defaults ship inside the package."""
    if text is None:
        text = open(path).read() if path else default_config_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    return _parse(data)


def config_hash(cfg: SimConfig) -> str:
    """Stable hash of the raw configuration tree."""
    canon = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
