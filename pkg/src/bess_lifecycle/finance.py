"""Project cash flows, internal rate of return and levelized cost of storage."""

from __future__ import annotations

import dataclasses
import math
import warnings
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, EmptyLedger, NoRootInBracket, NoSignChange, ZeroEnergy

# Battery recycling value as a share of its purchase cost, by chemistry.
RECYCLE_RATIO_BAT = {"lfp": 0.30, "ncm": 0.10}
RECYCLE_RATIO_EQU = 0.40

IRR_LO, IRR_HI, IRR_STEP = -0.99, 10.0, 0.01


@dataclasses.dataclass(frozen=True)
class CostModel:
    """One-off project costs in $.

    ``income_rcy_override`` replaces the recycling formula when set (the
    published case-study tables quote values that differ from the formula).
    """

    cost_bat_pur: float
    cost_equ: float
    cost_sta: float
    k_dec: float = 4 / 11
    recycle_ratio_bat: float = 0.30
    recycle_ratio_equ: float = RECYCLE_RATIO_EQU
    income_rcy_override: float | None = None

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is not None and value < 0:
                raise DomainError(f"{f.name} must be non-negative")

    @property
    def cost_bat_exc(self) -> float:
        return replacement_cost(self)

    @property
    def income_rcy(self) -> float:
        if self.income_rcy_override is not None:
            return self.income_rcy_override
        return recycling_income(self)

    @property
    def initial_investment(self) -> float:
        return self.cost_bat_pur + self.cost_equ + self.cost_sta

    def replace(self, **changes) -> "CostModel":
        return dataclasses.replace(self, **changes)


LFP_COSTS = CostModel(4_150_000.0, 1_950_000.0, 1_280_000.0, recycle_ratio_bat=RECYCLE_RATIO_BAT["lfp"])
NCM_COSTS = CostModel(8_330_000.0, 1_950_000.0, 1_280_000.0, recycle_ratio_bat=RECYCLE_RATIO_BAT["ncm"])
COST_PRESETS = {"lfp": LFP_COSTS, "ncm": NCM_COSTS}
# Recycling incomes printed in the case-study tables, usable as overrides.
TABLE_INCOME_RCY = {"lfp": 1_190_000.0, "ncm": 3_270_000.0}


def cost_preset(name: str) -> CostModel:
    try:
        return COST_PRESETS[name.lower()]
    except KeyError:
        raise DomainError(f"unknown chemistry {name!r}") from None


def replacement_cost(costs: CostModel) -> float:
    """Battery replacement cost at retirement: ``k_dec * cost_bat_pur``."""
    return costs.k_dec * costs.cost_bat_pur


def recycling_income(costs: CostModel, chemistry: str | None = None) -> float:
    """Value recovered from the retired battery and equipment."""
    ratio = costs.recycle_ratio_bat if chemistry is None else RECYCLE_RATIO_BAT[chemistry.lower()]
    return ratio * costs.cost_bat_pur + costs.recycle_ratio_equ * costs.cost_equ


@dataclasses.dataclass(frozen=True, eq=False)
class CashFlowSeries:
    """Net cash flow per year, ``flows[0]`` being the investment year."""

    flows: np.ndarray
    start_year: int | None = None

    def __post_init__(self):
        arr = np.array(self.flows, dtype=float)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise DomainError("a cash-flow series needs C_0 and at least one more year")
        if not np.all(np.isfinite(arr)):
            raise DomainError("cash flows must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "flows", arr)

    def __len__(self):
        return self.flows.shape[0]


def _flows(flows) -> np.ndarray:
    if isinstance(flows, CashFlowSeries):
        return flows.flows
    return np.asarray(flows, dtype=float)


def build_cashflows(ledger, costs: CostModel) -> CashFlowSeries:
    """Year-indexed project cash flows from a lifecycle ledger.

    Year 0 carries the investment, years 1..n the market income net of O&M,
    and year n additionally the recycling income.
    """
    rows = list(ledger.rows)
    if not rows:
        raise EmptyLedger("ledger has no operating years")
    flows = [-costs.initial_investment]
    prev_income = prev_cost = 0.0
    for row in rows:
        flows.append((row.income - prev_income) - (row.cost_op - prev_cost))
        prev_income, prev_cost = row.income, row.cost_op
    flows[-1] += costs.income_rcy
    start = rows[0].year - 1 if rows[0].year > 1000 else None
    return CashFlowSeries(np.array(flows), start_year=start)


def npv(flows, rate: float) -> float:
    """Net present value with ``flows[0]`` undiscounted."""
    if rate <= -1:
        raise DomainError("rate must exceed -1")
    c = _flows(flows)
    t = np.arange(c.shape[0])
    return float(np.sum(c / (1.0 + rate) ** t))


def sign_changes(flows) -> int:
    c = _flows(flows)
    s = np.sign(c[c != 0])
    return int(np.sum(s[1:] != s[:-1]))


def irr(flows) -> float:
    """Smallest root of NPV in [-0.99, 10].

    A 0.01-step scan brackets the first sign change and bisection refines it
    until the bracket collapses to adjacent floats, which leaves
    ``|NPV| <= 1e-9 |C_0|`` with a wide margin. Series with several sign
    changes emit a ``RuntimeWarning``.
    """
    c = _flows(flows)
    changes = sign_changes(c)
    if changes == 0:
        raise NoSignChange("cash flows never change sign; IRR is undefined")
    if changes > 1:
        warnings.warn("cash flows change sign more than once; returning the smallest IRR", RuntimeWarning, stacklevel=2)

    n_steps = int(round((IRR_HI - IRR_LO) / IRR_STEP))
    grid = np.round(IRR_LO + IRR_STEP * np.arange(n_steps + 1), 10)
    lo = grid[0]
    f_lo = npv(c, lo)
    if f_lo == 0:
        return float(lo)
    for hi in grid[1:]:
        f_hi = npv(c, hi)
        if f_hi == 0:
            return float(hi)
        if (f_lo < 0) != (f_hi < 0):
            root = _bisect(c, lo, hi, f_lo, f_hi)
            # float noise leaves a band of near-roots; prefer a short decimal in it
            snapped = round(root, 12)
            return snapped if abs(npv(c, snapped)) <= abs(npv(c, root)) else root
        lo, f_lo = hi, f_hi
    raise NoRootInBracket(f"NPV has no root in [{IRR_LO}, {IRR_HI}]")


def _bisect(c, lo, hi, f_lo, f_hi) -> float:
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            # adjacent floats: keep the end closer to a zero NPV
            return float(lo if abs(f_lo) <= abs(f_hi) else hi)
        f_mid = npv(c, mid)
        if f_mid == 0:
            return float(mid)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid


def irr_report(flows) -> dict:
    rate = irr(flows)
    return {"irr": rate, "npv_check": npv(flows, rate), "multiple_sign_changes": sign_changes(flows) > 1}


# ----------------------------------------------------------------------------
# LCOS


@dataclasses.dataclass(frozen=True)
class LcosYear:
    opex: float = 0.0
    capex_re: float = 0.0
    charge_cost: float = 0.0
    other_income: float = 0.0
    energy_out: float = 0.0

    def __post_init__(self):
        if self.energy_out < 0:
            raise DomainError("delivered energy must be non-negative")

    @property
    def annual_cost(self) -> float:
        return self.opex + self.capex_re + self.charge_cost - self.other_income


@dataclasses.dataclass(frozen=True)
class LcosInputs:
    capex: float
    yearly: tuple[LcosYear, ...]
    discount_schedule: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "yearly", tuple(self.yearly))
        object.__setattr__(self, "discount_schedule", tuple(float(r) for r in self.discount_schedule))
        if len(self.discount_schedule) < len(self.yearly):
            raise DomainError("discount schedule must cover every year")
        if any(r <= -1 for r in self.discount_schedule):
            raise DomainError("discount rates must exceed -1")


def stepped_discount_schedule(
    first_year: int,
    n_years: int,
    steps: Mapping[int, float] | None = None,
) -> tuple[float, ...]:
    """Per-year rates from a ``{first year of step: rate}`` table.

    The default table is 8 % from 2022, 7 % from 2027 and 6 % from 2032 on.
    """
    steps = dict(steps or {2022: 0.08, 2027: 0.07, 2032: 0.06})
    starts = sorted(steps)
    out = []
    for year in range(first_year, first_year + n_years):
        applicable = [s for s in starts if s <= year]
        out.append(steps[applicable[-1]] if applicable else steps[starts[0]])
    return tuple(out)


def discount_factors(rates: Sequence[float]) -> np.ndarray:
    """Cumulative factor for year t: the product of ``1 + i_s`` for s <= t."""
    return np.cumprod(1.0 + np.asarray(rates, dtype=float))


def lcos(inputs: LcosInputs) -> float:
    """Discounted lifetime cost per discounted MWh delivered ($/MWh)."""
    n = len(inputs.yearly)
    factors = discount_factors(inputs.discount_schedule[:n])
    costs = np.array([y.annual_cost for y in inputs.yearly])
    energy = np.array([y.energy_out for y in inputs.yearly])
    denom = float(np.sum(energy / factors))
    if not denom > 0 or not math.isfinite(denom):
        raise ZeroEnergy("no discounted energy delivered")
    return (inputs.capex + float(np.sum(costs / factors))) / denom


def lcos_inputs_from_ledger(ledger, costs: CostModel, schedule: Sequence[float]) -> LcosInputs:
    """LCOS inputs for a simulated project.

    Annual O&M is the operating cost, charging cost is the energy bought,
    and the recycling income is credited in the final year.
    """
    rows = list(ledger.rows)
    if not rows:
        raise EmptyLedger("ledger has no operating years")
    yearly = []
    prev = None
    for row in rows:
        def inc(attr):
            return getattr(row, attr) - (getattr(prev, attr) if prev is not None else 0.0)

        yearly.append(
            LcosYear(
                opex=inc("cost_op"),
                charge_cost=inc("charge_cost"),
                energy_out=inc("energy_out"),
            )
        )
        prev = row
    yearly[-1] = dataclasses.replace(yearly[-1], other_income=costs.income_rcy)
    return LcosInputs(costs.initial_investment, tuple(yearly), tuple(schedule))
