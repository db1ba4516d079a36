"""Cycle-aging model: stress-factor SOH fit, Miner's-rule cycle life and
half-cycle capacity-loss accounting."""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, NoRoot, SocOutOfRange

# Operating point fixed for the grid-scale case: 30 degC, mSOC 50 %, 0.5C
# for a 2 h battery.
FIXED_T_KELVIN = 303.15
FIXED_MSOC = 50.0
FIXED_C_RATE = 0.5


@dataclasses.dataclass(frozen=True)
class DegradationParams:
    beta: float
    k_T: float
    k_DoD: float
    k_C_ch: float
    k_C_dch: float
    k_mSOC: float
    alpha_opt: float
    T_ref: float
    mSOC_ref: float
    N_100: float
    alpha_cycle: float = 1.0

    def __post_init__(self):
        if not self.N_100 > 0:
            raise DomainError("N_100 must be positive")
        if not self.alpha_cycle > 0:
            raise DomainError("alpha_cycle must be positive")
        if not self.T_ref > 0:
            raise DomainError("T_ref must be positive")
        if not 0 < self.mSOC_ref <= 100:
            raise DomainError("mSOC_ref must lie in (0, 100]")

    def replace(self, **changes) -> "DegradationParams":
        return dataclasses.replace(self, **changes)


NCM = DegradationParams(
    beta=0.001673,
    k_T=21.6745,
    k_DoD=0.022,
    k_C_ch=0.2533,
    k_C_dch=0.1571,
    k_mSOC=-0.0212,
    alpha_opt=0.915,
    T_ref=293.0,
    mSOC_ref=42.0,
    N_100=10420.0,
)

LFP = DegradationParams(
    beta=0.003414,
    k_T=5.8755,
    k_DoD=-0.0046,
    k_C_ch=0.1038,
    k_C_dch=0.296,
    k_mSOC=0.0513,
    alpha_opt=0.869,
    T_ref=293.0,
    mSOC_ref=42.0,
    N_100=13627.0,
)

PRESETS = {"lfp": LFP, "ncm": NCM}


def preset(name: str) -> DegradationParams:
    try:
        return PRESETS[name.lower()]
    except KeyError:
        raise DomainError(f"unknown chemistry {name!r}; expected one of {sorted(PRESETS)}") from None


@dataclasses.dataclass(frozen=True)
class StressPoint:
    """Operating stress. DoD and mSOC in percent, C-rates in 1/h, T in K."""

    T: float
    DoD: float
    C_ch: float
    C_dch: float
    mSOC: float
    FEC: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("T must be positive (kelvin)")
        if not 0 <= self.DoD <= 100:
            raise DomainError("DoD must lie in [0, 100] percent")
        if not 0 <= self.mSOC <= 100:
            raise DomainError("mSOC must lie in [0, 100] percent")
        if self.C_ch < 0 or self.C_dch < 0:
            raise DomainError("C-rates must be non-negative")
        if self.FEC < 0:
            raise DomainError("FEC must be non-negative")


def fixed_stress(c_rate: float = FIXED_C_RATE) -> StressPoint:
    """Stress point of the simplified model at 100 % DoD and zero cycles."""
    return StressPoint(T=FIXED_T_KELVIN, DoD=100.0, C_ch=c_rate, C_dch=c_rate, mSOC=FIXED_MSOC)


def stress_factor(p: DegradationParams, s: StressPoint) -> float:
    """Everything in the SOH fit except the ``FEC**alpha_opt`` term."""
    expo = (
        p.k_T * (s.T - p.T_ref) / s.T
        + p.k_DoD * s.DoD
        + p.k_C_ch * s.C_ch
        + p.k_C_dch * s.C_dch
    )
    msoc = 1.0 + p.k_mSOC * s.mSOC * (1.0 - s.mSOC / (2.0 * p.mSOC_ref))
    return p.beta * math.exp(expo) * msoc


def soh_full(p: DegradationParams, s: StressPoint) -> float:
    """State of health in percent after ``s.FEC`` full equivalent cycles."""
    if s.FEC == 0:
        return 100.0
    return 100.0 - stress_factor(p, s) * s.FEC**p.alpha_opt


def cycle_life(p: DegradationParams, d: float) -> float:
    """Cycles to end of life when every cycle has depth ``d`` (0 < d <= 1)."""
    if not 0 < d <= 1:
        raise DomainError(f"depth of discharge {d} outside (0, 1]")
    return p.N_100 / d**p.alpha_cycle


def per_cycle_loss(p: DegradationParams, d: float) -> float:
    """Fraction of life consumed by one full cycle of depth ``d``."""
    if not 0 <= d <= 1:
        raise DomainError(f"depth of discharge {d} outside [0, 1]")
    if d == 0:
        return 0.0
    return d**p.alpha_cycle / p.N_100


@dataclasses.dataclass(frozen=True)
class HalfCycleList:
    cycles: tuple[float, ...] = ()

    def __post_init__(self):
        cycles = tuple(float(c) for c in self.cycles)
        for c in cycles:
            if not 0 < c <= 1:
                raise DomainError(f"half-cycle depth {c} outside (0, 1]")
        object.__setattr__(self, "cycles", cycles)

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)


def extract_half_cycles(soc: Sequence[float], E_r: float, tol: float = 1e-9) -> HalfCycleList:
    """Split an energy trajectory into monotone segments between extrema.

    Flat steps are merged into the surrounding segment; each rising or
    falling run becomes one half cycle with depth ``|swing| / E_r``.
    ``tol`` (relative to ``E_r``) only widens the admissible energy range.
    """
    e = np.asarray(soc, dtype=float)
    if E_r <= 0:
        raise DomainError("E_r must be positive")
    slack = tol * E_r
    if np.any(e < -slack) or np.any(e > E_r + slack):
        raise SocOutOfRange("energy trajectory leaves [0, E_r]")
    steps = np.diff(e)
    cycles: list[float] = []
    run = 0.0
    sign = 0
    for step in steps:
        s = int(np.sign(step))
        if s == 0:
            continue
        if sign and s != sign:
            cycles.append(abs(run))
            run = 0.0
        sign = s
        run += step
    if sign:
        cycles.append(abs(run))
    depths = [min(c / E_r, 1.0) for c in cycles if c > 0]
    return HalfCycleList(tuple(depths))


def capacity_loss(h: HalfCycleList, p: DegradationParams) -> float:
    """Capacity fraction lost; each half cycle counts as half a full cycle."""
    return sum(0.5 * d**p.alpha_cycle / p.N_100 for d in h)


def total_variation_loss(soc: Sequence[float], E_r: float, p: DegradationParams) -> float:
    """Linear surrogate ``sum |e_t - e_{t-1}| / (2 E_r N_100)``.

    Equals ``capacity_loss(extract_half_cycles(soc))`` when ``alpha_cycle == 1``.
    """
    e = np.asarray(soc, dtype=float)
    return float(np.sum(np.abs(np.diff(e)))) / (2.0 * E_r * p.N_100)


def solve_n100_from_soh(
    p: DegradationParams,
    stress: StressPoint | None = None,
    soh_floor: float = 80.0,
    fec_max: float = 1e9,
) -> float:
    """Full equivalent cycles at 100 % DoD until SOH falls to ``soh_floor``."""
    if not 0 < soh_floor < 100:
        raise DomainError("soh_floor must lie in (0, 100)")
    base = stress or fixed_stress()
    base = dataclasses.replace(base, DoD=100.0, FEC=0.0)

    def gap(fec):
        return soh_full(p, dataclasses.replace(base, FEC=fec)) - soh_floor

    if stress_factor(p, base) <= 0 or gap(fec_max) > 0:
        raise NoRoot(f"SOH never reaches {soh_floor}% within {fec_max:g} cycles")
    hi = 1.0
    while gap(hi) > 0:
        hi *= 2.0
    lo = hi / 2.0 if hi > 1.0 else 0.0
    return brentq(gap, lo, min(hi, fec_max), xtol=1e-300, rtol=1e-10, maxiter=500)
