"""Per-ion fluorescence: five-level rate equations and the shelving telegraph.

Level ordering used throughout: [S1/2, P1/2, D3/2, P3/2, D5/2].  The rate
matrix is a proper generator (columns sum to zero), so the exact
matrix-exponential step preserves positivity and normalization without any
step-size tuning.

Decay rates and branching fractions of the ion are configuration values
with literature-style defaults; the only quantitatively anchored number is
the 395 ms D5/2 lifetime that sets the dark-period statistics of the
telegraph signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

__all__ = [
    "S12", "P12", "D32", "P32", "D52", "LEVELS",
    "IonLevelSystem",
    "TelegraphParams",
    "rate_matrix",
    "evolve_populations",
    "steady_state",
    "telegraph_dwells",
    "telegraph_trace",
    "crystal_signal",
]

S12, P12, D32, P32, D52 = range(5)
LEVELS = ("S1/2", "P1/2", "D3/2", "P3/2", "D5/2")


@dataclass(frozen=True)
class IonLevelSystem:
    """Populations and rates of the five-level ion.

    Pump rates couple pairs of levels symmetrically (stimulated absorption
    and emission at equal rate): R_422 on S1/2-P1/2, R_1092 on D3/2-P1/2,
    R_ase_408 on S1/2-P3/2.  Decay rates are total spontaneous rates with
    branching fractions; the metastable D levels decay directly to S1/2.
    """

    populations: np.ndarray = field(
        default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0, 0.0]))
    r_422: float = 0.0
    r_1092: float = 0.0
    r_ase_408: float = 0.0
    gamma_p12: float = 1.26e8        # 1/s
    p12_branch_s: float = 0.944      # remainder to D3/2
    gamma_p32: float = 1.51e8        # 1/s
    p32_branch_s: float = 0.935
    p32_branch_d32: float = 0.007    # remainder to D5/2
    tau_d52: float = 0.395           # s
    tau_d32: float = 0.435           # s

    def __post_init__(self):
        pops = np.asarray(self.populations, dtype=float)
        if pops.shape != (5,) or np.any(pops < 0.0):
            raise ValueError("populations must be 5 nonnegative numbers")
        if abs(pops.sum() - 1.0) > 1e-9:
            raise ValueError("populations must sum to 1 within 1e-9")
        for name in ("r_422", "r_1092", "r_ase_408"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.p12_branch_s <= 1.0:
            raise ValueError("p12_branch_s must be in [0, 1]")
        if self.p32_branch_s < 0.0 or self.p32_branch_d32 < 0.0 \
                or self.p32_branch_s + self.p32_branch_d32 > 1.0:
            raise ValueError("P3/2 branching fractions must be in [0, 1] and sum to <= 1")
        if self.tau_d52 <= 0.0 or self.tau_d32 <= 0.0:
            raise ValueError("metastable lifetimes must be > 0")


def rate_matrix(sys: IonLevelSystem) -> np.ndarray:
    """Generator matrix Q with dp/dt = Q p; columns sum to zero."""
    q = np.zeros((5, 5))

    def add(rate: float, src: int, dst: int) -> None:
        q[dst, src] += rate
        q[src, src] -= rate

    add(sys.r_422, S12, P12)
    add(sys.r_422, P12, S12)
    add(sys.r_1092, D32, P12)
    add(sys.r_1092, P12, D32)
    add(sys.r_ase_408, S12, P32)
    add(sys.r_ase_408, P32, S12)
    add(sys.gamma_p12 * sys.p12_branch_s, P12, S12)
    add(sys.gamma_p12 * (1.0 - sys.p12_branch_s), P12, D32)
    add(sys.gamma_p32 * sys.p32_branch_s, P32, S12)
    add(sys.gamma_p32 * sys.p32_branch_d32, P32, D32)
    add(sys.gamma_p32 * (1.0 - sys.p32_branch_s - sys.p32_branch_d32), P32, D52)
    add(1.0 / sys.tau_d52, D52, S12)
    add(1.0 / sys.tau_d32, D32, S12)
    return q


def evolve_populations(sys: IonLevelSystem, dt: float) -> IonLevelSystem:
    """Advance the populations by dt with the exact matrix-exponential step."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    p = expm(rate_matrix(sys) * dt) @ sys.populations
    p = np.maximum(p, 0.0)
    p /= p.sum()
    return replace(sys, populations=p)


def steady_state(sys: IonLevelSystem) -> np.ndarray:
    """Stationary population vector (null space of the generator)."""
    q = rate_matrix(sys)
    # replace one balance equation by the normalization constraint
    a = np.vstack([q[:-1], np.ones(5)])
    b = np.zeros(5)
    b[-1] = 1.0
    p, *_ = np.linalg.lstsq(a, b, rcond=None)
    p = np.maximum(p, 0.0)
    return p / p.sum()


@dataclass(frozen=True)
class TelegraphParams:
    """Bright/dark jump process of one cooled ion.

    shelving_rate : effective S -> D5/2 pumping rate via P3/2 (1/s),
        proportional to the 405 nm diode power that carries the 408 nm ASE.
    deshelving_rate : 1/tau_D5/2 (1/s).
    bright_scatter_rate : 422 nm photons/s emitted while bright.
    collection_efficiency : detected fraction of emitted photons.
    dark_count_rate : detected background counts/s (present in every bin).
    """

    shelving_rate: float
    deshelving_rate: float = 1.0 / 0.395
    bright_scatter_rate: float = 3.0e5
    collection_efficiency: float = 0.02
    dark_count_rate: float = 300.0

    def __post_init__(self):
        for name in ("shelving_rate", "deshelving_rate", "bright_scatter_rate",
                     "dark_count_rate"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 < self.collection_efficiency <= 1.0:
            raise ValueError("collection_efficiency must be in (0, 1]")


def telegraph_dwells(p: TelegraphParams, duration: float,
                     rng: np.random.Generator,
                     start_bright: bool = True) -> list[tuple[float, bool, float]]:
    """Jump history [(t_start, bright, dwell), ...] covering [0, duration].

    Dwell times are exponential with the state's exit rate; a zero exit rate
    pins the state for the rest of the trace.
    """
    if duration <= 0.0:
        raise ValueError("duration must be > 0")
    out: list[tuple[float, bool, float]] = []
    t = 0.0
    bright = start_bright
    while t < duration:
        rate = p.shelving_rate if bright else p.deshelving_rate
        dwell = rng.exponential(1.0 / rate) if rate > 0.0 else math.inf
        dwell = min(dwell, duration - t)
        out.append((t, bright, dwell))
        t += dwell
        bright = not bright
    return out


def _bright_overlap(dwells: list[tuple[float, bool, float]], t0: float, t1: float) -> float:
    """Bright time inside [t0, t1] given a jump history."""
    total = 0.0
    for start, bright, dwell in dwells:
        if not bright:
            continue
        lo = max(start, t0)
        hi = min(start + dwell, t1)
        if hi > lo:
            total += hi - lo
    return total


def telegraph_trace(p: TelegraphParams, duration: float, bin_width: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Binned single-ion trace: structured array (bin_time, counts, bright).

    Photon counts are Poisson with mean bright_rate * eta * bright-time plus
    dark_count_rate * bin; ``bright`` flags bins with majority bright
    occupancy.
    """
    if not duration > bin_width > 0.0:
        raise ValueError("need duration > bin > 0")
    dwells = telegraph_dwells(p, duration, rng)
    n_bins = int(duration / bin_width)
    out = np.zeros(n_bins, dtype=[("bin_time", float), ("counts", int), ("bright", bool)])
    eta = p.collection_efficiency
    for k in range(n_bins):
        t0 = k * bin_width
        t1 = t0 + bin_width
        bright_t = _bright_overlap(dwells, t0, t1)
        mean = p.bright_scatter_rate * eta * bright_t + p.dark_count_rate * bin_width
        out[k] = (t0, rng.poisson(mean), bright_t >= 0.5 * bin_width)
    return out


def crystal_signal(ion_classes: list[str], params: TelegraphParams, duration: float,
                   bin_width: float, rng_for_ion, background_rng: np.random.Generator,
                   shelving_active: bool = True) -> np.ndarray:
    """Summed camera counts of a crystal: (bin_time, counts, n_bright).

    ``ion_classes`` lists the cooling class name per ion; only "cooled" ions
    scatter.  ``rng_for_ion(i)`` must return an independent generator per ion
    index so that the aggregation order is fixed and reproducible.  With
    ``shelving_active`` False the jump process never leaves the bright state.
    """
    n_bins = int(duration / bin_width)
    out = np.zeros(n_bins, dtype=[("bin_time", float), ("counts", int), ("n_bright", int)])
    out["bin_time"] = np.arange(n_bins) * bin_width
    eta = params.collection_efficiency
    for i, cls in enumerate(ion_classes):
        if cls != "cooled":
            continue
        rng = rng_for_ion(i)
        p_i = params if shelving_active else replace(params, shelving_rate=0.0)
        dwells = telegraph_dwells(p_i, duration, rng)
        for k in range(n_bins):
            t0 = k * bin_width
            bright_t = _bright_overlap(dwells, t0, t0 + bin_width)
            out["counts"][k] += rng.poisson(params.bright_scatter_rate * eta * bright_t)
            if bright_t >= 0.5 * bin_width:
                out["n_bright"][k] += 1
    out["counts"] += background_rng.poisson(params.dark_count_rate * bin_width, size=n_bins)
    return out
