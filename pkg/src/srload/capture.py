"""Isotope-dependent capture of freshly created ions into the crystal.

The 422 nm cooling laser sits ~200 MHz red of the 88Sr+ resonance.  Because
of the ion isotope shifts that makes it *blue* of the 86Sr+ line (heating)
and several GHz from any 87Sr+ component (neither cooled nor heated).  The
capture model turns that classification into capture probabilities with a
sympathetic-cooling bonus per already-trapped cooled ion.

The shipped default probabilities are fitted (coarse grid search, see
tools/fit_capture_model.py and docs/model_notes.md) so that the full
pipeline loads 92% 88Sr+ at natural abundance.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .source import IsotopeSpec

__all__ = [
    "CoolingClass",
    "TrapConfig",
    "CaptureModel",
    "IonCrystal",
    "classify_cooling",
    "capture",
    "loaded_fraction_report",
]


class CoolingClass(enum.Enum):
    COOLED = "cooled"
    HEATED = "heated"
    UNCOUPLED = "uncoupled"


@dataclass(frozen=True)
class TrapConfig:
    """Linear-trap parameters; carried for display and the capacity heuristic."""

    omega_radial: float = 2.0 * math.pi * 2.0e6   # rad/s
    omega_axial: float = 2.0 * math.pi * 400.0e3  # rad/s
    capacity: int = 12

    def __post_init__(self):
        if self.omega_radial <= 0.0 or self.omega_axial <= 0.0:
            raise ValueError("trap frequencies must be > 0")
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")


@dataclass(frozen=True)
class CaptureModel:
    """Capture probabilities by cooling class plus the sympathetic term.

    capture p = min(1, base + sympathetic_gain * n_cooled_trapped) for ions
    that are not directly cooled; directly cooled ions use p_cooled alone.
    """

    p_cooled: float = 0.98
    p_uncooled: float = 0.857
    p_heated_alone: float = 0.214
    sympathetic_gain: float = 0.3

    def __post_init__(self):
        for name in ("p_cooled", "p_uncooled", "p_heated_alone"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.sympathetic_gain < 0.0:
            raise ValueError("sympathetic_gain must be >= 0")
        if not self.p_heated_alone <= self.p_uncooled <= self.p_cooled:
            raise ValueError("expected p_heated_alone <= p_uncooled <= p_cooled")

    def base_probability(self, cls: CoolingClass) -> float:
        if cls is CoolingClass.COOLED:
            return self.p_cooled
        if cls is CoolingClass.UNCOUPLED:
            return self.p_uncooled
        return self.p_heated_alone

    def probability(self, cls: CoolingClass, n_cooled_trapped: int) -> float:
        p = self.base_probability(cls)
        if cls is not CoolingClass.COOLED:
            p = min(1.0, p + self.sympathetic_gain * n_cooled_trapped)
        return p


@dataclass
class TrappedIon:
    mass_number: int
    cooling_class: CoolingClass
    capture_time: float
    ion_id: int


@dataclass
class IonCrystal:
    """Ordered trapped-ion register with per-isotope creation counters."""

    capacity: int = 12
    ions: list[TrappedIon] = field(default_factory=list)
    created_total: Counter = field(default_factory=Counter)

    def size(self) -> int:
        return len(self.ions)

    def n_cooled(self) -> int:
        return sum(1 for ion in self.ions if ion.cooling_class is CoolingClass.COOLED)

    def composition(self) -> Counter:
        return Counter(ion.mass_number for ion in self.ions)

    def clear(self) -> None:
        """Empty the trap; creation counters are preserved."""
        self.ions.clear()


def classify_cooling(isotope: IsotopeSpec, cooling_detuning_88: float,
                     far_threshold: float = 2.0 * math.pi * 1.5e9) -> CoolingClass:
    """Cooling class of an ion under the shared 422 nm cooling beam.

    ``cooling_detuning_88`` is the laser detuning (rad/s) from the 88Sr+
    resonance; the isotope's own effective detuning subtracts its 422 nm
    shift.  Red detunings inside the band cool, blue detunings heat, and
    detunings beyond ``far_threshold`` leave the ion uncoupled.
    """
    delta_eff = cooling_detuning_88 - isotope.shift_422_ion
    if abs(delta_eff) >= far_threshold:
        return CoolingClass.UNCOUPLED
    return CoolingClass.COOLED if delta_eff < 0.0 else CoolingClass.HEATED


def capture(isotope: IsotopeSpec, cls: CoolingClass, crystal: IonCrystal,
            model: CaptureModel, rng: np.random.Generator,
            capture_time: float = 0.0, ion_id: int = 0) -> tuple[bool, str]:
    """Attempt to capture one freshly created ion.

    Returns (captured, reason); reason is "" on success, "full" when the
    crystal is at capacity, "not_captured" when the Bernoulli draw fails.
    The creation counter is updated either way.
    """
    crystal.created_total[isotope.mass_number] += 1
    if crystal.size() >= crystal.capacity:
        return False, "full"
    p = model.probability(cls, crystal.n_cooled())
    if rng.random() >= p:
        return False, "not_captured"
    crystal.ions.append(TrappedIon(isotope.mass_number, cls, capture_time, ion_id))
    return True, ""


def loaded_fraction_report(n_runs: int, creation_rates: dict[int, float],
                           isotopes: list[IsotopeSpec], model: CaptureModel,
                           cooling_detuning_88: float, rng: np.random.Generator,
                           far_threshold: float = 2.0 * math.pi * 1.5e9,
                           ions_per_run: int = 1,
                           capacity: int = 12) -> dict[int, dict[str, float]]:
    """Monte Carlo loaded-isotope fractions with Wilson confidence intervals.

    Each run starts from an empty trap and draws ion-creation events in
    proportion to ``creation_rates`` until ``ions_per_run`` ions are
    captured.  Fractions are over all captured ions and sum to 1.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    by_mass = {iso.mass_number: iso for iso in isotopes}
    masses = sorted(creation_rates)
    weights = np.array([creation_rates[m] for m in masses], dtype=float)
    if weights.sum() <= 0.0:
        raise ValueError("creation rates must have positive total")
    weights /= weights.sum()
    classes = {m: classify_cooling(by_mass[m], cooling_detuning_88, far_threshold)
               for m in masses}

    captured: Counter = Counter()
    total = 0
    ion_id = 0
    for _ in range(n_runs):
        crystal = IonCrystal(capacity=capacity)
        while crystal.size() < ions_per_run:
            m = masses[int(rng.choice(len(masses), p=weights))]
            ion_id += 1
            ok, _ = capture(by_mass[m], classes[m], crystal, model, rng, ion_id=ion_id)
            if ok:
                captured[m] += 1
                total += 1

    z = 1.959963984540054  # 95% normal quantile
    report: dict[int, dict[str, float]] = {}
    for m in masses:
        k = captured[m]
        p_hat = k / total
        denom = 1.0 + z * z / total
        center = (p_hat + z * z / (2 * total)) / denom
        half = z * math.sqrt(p_hat * (1 - p_hat) / total + z * z / (4 * total * total)) / denom
        report[m] = {
            "fraction": p_hat,
            "ci_low": max(center - half, 0.0),
            "ci_high": min(center + half, 1.0),
            "captured": float(k),
        }
    return report
