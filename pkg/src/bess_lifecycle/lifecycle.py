"""Representative-day selection and the year-by-year life-cycle fold."""

from __future__ import annotations

import calendar
import dataclasses
import datetime as dt
import json
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from . import clustering
from . import degradation as deg
from .dispatch import DailyResult, BatteryParams, energy_flows, simulate_day
from .errors import CountMismatch, MissingData, NeverDies, WrongCount
from .market_data import MarketDay, align_days, available_dates, load_day_from_root, load_year

TYPICAL_DAYS = 36
TYPICAL_SCALE = 10
FESTIVALS = ((7, 4), (11, 1), (12, 25))
OUTLIER_SIGMAS = 3.0
# absorbs float drift when summing equal annual losses up to the threshold
THRESHOLD_RTOL = 1e-9

# (first day, last day or None for month end, slot kind)
WINDOWS = ((1, 10, "weekday"), (11, 20, "weekend"), (21, None, "weekday"))


def _kind_ok(date: dt.date, kind: str) -> bool:
    return (date.weekday() < 5) == (kind == "weekday")


@dataclasses.dataclass(frozen=True)
class TypicalDaySet:
    dates: tuple[dt.date, ...]
    kinds: tuple[str, ...]  # weekday | weekend | festival
    scale_factor: int = TYPICAL_SCALE
    replaced: tuple[tuple[dt.date, dt.date], ...] = ()  # outlier swaps (old, new)

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if len(self.dates) != TYPICAL_DAYS or len(self.kinds) != TYPICAL_DAYS:
            raise WrongCount(f"a typical-day set has exactly {TYPICAL_DAYS} dates")


def _daily_means(root, dates) -> dict[dt.date, float]:
    return {d: float(np.mean(load_day_from_root(root, d).price_energy)) for d in dates}


def select_typical_days(year: int, price_root, means: dict[dt.date, float] | None = None) -> TypicalDaySet:
    """Three calendar-rule days per month, with festivals and outlier swaps.

    ``means`` (daily mean energy price by date) may be passed instead of
    reading the price files.
    """
    if means is None:
        dates = available_dates(price_root, year)
        means = _daily_means(price_root, dates)
    have = sorted(d for d in means if d.year == year)
    present = set(have)

    slots: list[list] = []  # [date, kind, window start, window end]
    for month in range(1, 13):
        last = calendar.monthrange(year, month)[1]
        for lo, hi, kind in WINDOWS:
            hi = hi or last
            window = [dt.date(year, month, day) for day in range(lo, hi + 1)]
            pick = next((d for d in window if d in present and _kind_ok(d, kind)), None)
            if pick is None:
                raise MissingData(f"no {kind} with prices in {year}-{month:02d} days {lo}-{hi}")
            slots.append([pick, kind, lo, hi])

    for month, day in FESTIVALS:
        fest = dt.date(year, month, day)
        if fest not in present:
            raise MissingData(f"no prices for festival {fest}")
        in_month = [s for s in slots if s[0].month == month]
        if any(s[0] == fest for s in in_month):
            next(s for s in in_month if s[0] == fest)[1] = "festival"
            continue
        prior = [s for s in in_month if s[0] < fest]
        target = max(prior, key=lambda s: s[0]) if prior else min(in_month, key=lambda s: abs((s[0] - fest).days))
        target[0], target[1] = fest, "festival"

    replaced = []
    taken = {s[0] for s in slots}
    for month in range(1, 13):
        vals = np.array([means[d] for d in have if d.month == month])
        mu, sigma = float(vals.mean()), float(vals.std())

        def outlier(d):
            return abs(means[d] - mu) > OUTLIER_SIGMAS * sigma

        for s in slots:
            date, kind, lo, hi = s
            if date.month != month or kind == "festival" or not outlier(date):
                continue
            for day in range(date.day + 1, hi + 1):
                cand = dt.date(year, month, day)
                if cand in present and cand not in taken and _kind_ok(cand, kind) and not outlier(cand):
                    replaced.append((date, cand))
                    taken.discard(date)
                    taken.add(cand)
                    s[0] = cand
                    break

    return TypicalDaySet(
        dates=tuple(s[0] for s in slots),
        kinds=tuple(s[1] for s in slots),
        replaced=tuple(replaced),
    )


# ----------------------------------------------------------------------------
# Ledger


@dataclasses.dataclass(frozen=True)
class DayOutcome:
    """A representative day's dispatch economics plus its energy flows."""

    result: DailyResult
    charge_cost: float = 0.0  # $ paid for charging energy
    energy_out: float = 0.0  # MWh delivered


@dataclasses.dataclass(frozen=True)
class LedgerRow:
    """Cumulative totals at the end of operating year ``year``."""

    year: int
    income: float
    cost_op: float
    cap_loss: float
    cost_loss: float = 0.0
    charge_cost: float = 0.0
    energy_out: float = 0.0


ZERO_ROW = LedgerRow(0, 0.0, 0.0, 0.0)


@dataclasses.dataclass(frozen=True)
class LifecycleLedger:
    rows: tuple[LedgerRow, ...]
    end_of_life_year: int
    method: str
    threshold: float = 0.20

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "threshold": self.threshold,
            "end_of_life_year": self.end_of_life_year,
            "rows": [dataclasses.asdict(r) for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "LifecycleLedger":
        return cls(
            rows=tuple(LedgerRow(**r) for r in data["rows"]),
            end_of_life_year=int(data["end_of_life_year"]),
            method=data["method"],
            threshold=float(data.get("threshold", 0.20)),
        )

    @classmethod
    def from_json(cls, text: str) -> "LifecycleLedger":
        return cls.from_dict(json.loads(text))


def _outcome(x) -> DayOutcome:
    return x if isinstance(x, DayOutcome) else DayOutcome(x)


def _weighted(prev: LedgerRow, outcomes, weights) -> LedgerRow:
    outs = [_outcome(o) for o in outcomes]

    def total(get):
        return math.fsum(w * get(o) for o, w in zip(outs, weights))

    return LedgerRow(
        year=prev.year + 1,
        income=prev.income + total(lambda o: o.result.gross_income),
        cost_op=prev.cost_op + total(lambda o: o.result.cost_op),
        cap_loss=prev.cap_loss + total(lambda o: o.result.cap_loss),
        cost_loss=prev.cost_loss + total(lambda o: o.result.cost_loss),
        charge_cost=prev.charge_cost + total(lambda o: o.charge_cost),
        energy_out=prev.energy_out + total(lambda o: o.energy_out),
    )


def accumulate_typical(prev: LedgerRow, daily: Sequence) -> LedgerRow:
    """Next row: previous totals plus ten times the 36 typical-day sums."""
    daily = list(daily)
    if len(daily) != TYPICAL_DAYS:
        raise WrongCount(f"expected {TYPICAL_DAYS} typical-day results, got {len(daily)}")
    return _weighted(prev, daily, [TYPICAL_SCALE] * TYPICAL_DAYS)


def accumulate_cluster(prev: LedgerRow, cluster_results: Sequence, day_counts: Sequence[int], year_days: int | None = None) -> LedgerRow:
    """Next row: previous totals plus day-count-weighted cluster results."""
    cluster_results = list(cluster_results)
    counts = [int(c) for c in day_counts]
    if len(counts) != len(cluster_results):
        raise CountMismatch(f"{len(cluster_results)} results but {len(counts)} day counts")
    if any(c < 0 for c in counts):
        raise CountMismatch("day counts must be non-negative")
    if year_days is not None and sum(counts) != year_days:
        raise CountMismatch(f"day counts sum to {sum(counts)}, expected {year_days}")
    return _weighted(prev, cluster_results, counts)


def fold_years(
    annual: LedgerRow,
    *,
    method: str,
    threshold: float = 0.20,
    accelerated_fade: bool = False,
    fade_multiplier: float = 3.0,
    fade_onset: float = 0.20,
    max_years: int = 50,
) -> LifecycleLedger:
    """Repeat one year's increments until cumulative loss reaches ``threshold``.

    With ``accelerated_fade`` the loss accrued beyond ``fade_onset`` (and the
    matching degradation cost) is multiplied by ``fade_multiplier``.
    """
    if not annual.cap_loss > 0:
        raise NeverDies("annual capacity loss is zero; the battery never reaches end of life")
    rows = []
    row = ZERO_ROW
    limit = threshold * (1 - THRESHOLD_RTOL)
    for _ in range(max_years):
        loss = annual.cap_loss
        cost_loss = annual.cost_loss
        if accelerated_fade:
            base = max(0.0, min(loss, fade_onset * (1 - THRESHOLD_RTOL) - row.cap_loss))
            factor = (base + fade_multiplier * (loss - base)) / loss
            loss *= factor
            cost_loss *= factor
        row = LedgerRow(
            year=row.year + 1,
            income=row.income + annual.income,
            cost_op=row.cost_op + annual.cost_op,
            cap_loss=row.cap_loss + loss,
            cost_loss=row.cost_loss + cost_loss,
            charge_cost=row.charge_cost + annual.charge_cost,
            energy_out=row.energy_out + annual.energy_out,
        )
        rows.append(row)
        if row.cap_loss >= limit:
            return LifecycleLedger(tuple(rows), row.year, method, threshold)
    raise NeverDies(f"capacity loss {row.cap_loss:.4f} still below {threshold} after {max_years} years")


# ----------------------------------------------------------------------------
# Pipeline


def _solve_one(args) -> DayOutcome:
    day, b, d = args
    sol, result = simulate_day(day, b, d)
    _, delivered = energy_flows(sol, b)
    return DayOutcome(result, float(np.sum(day.price_energy * sol.cap_ch)), delivered)


def solve_days(days: Sequence[MarketDay], b: BatteryParams, d: deg.DegradationParams, workers: int = 1) -> list[DayOutcome]:
    """Dispatch every day independently; results keep the input order."""
    jobs = [(day, b, d) for day in days]
    if workers <= 1 or len(jobs) <= 1:
        return [_solve_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_one, jobs))


@dataclasses.dataclass
class LifecycleRun:
    ledger: LifecycleLedger
    annual: LedgerRow
    days: list[MarketDay]
    outcomes: list[DayOutcome]
    weights: list[int]
    cluster_model: clustering.ClusterModel | None = None
    typical_days: TypicalDaySet | None = None


def prepare_year(config, days: Sequence[MarketDay] | None = None) -> list[MarketDay]:
    if days is None:
        if config.market.root is None:
            raise MissingData("market.root is not configured")
        days = load_year(config.market.root, config.market.year)
    days = list(days)
    if config.market.reserve_shift_hours:
        days = align_days(days, "price_res", config.market.reserve_shift_hours)
    return days


def run_lifecycle_detailed(config, days: Sequence[MarketDay] | None = None) -> LifecycleRun:
    """Full pipeline: representative days, one dispatch each, yearly fold."""
    lc = config.lifecycle
    days = prepare_year(config, days)
    model = typical = None
    if lc.method == "typical":
        by_date = {d.date: d for d in days}
        means = {d.date: float(np.mean(d.price_energy)) for d in days}
        typical = select_typical_days(config.market.year, None, means=means)
        reps = [by_date[t] for t in typical.dates]
        weights = [TYPICAL_SCALE] * TYPICAL_DAYS
    else:
        model = clustering.cluster_days(days, lc.k, lc.metric, lc.seed)
        reps = model.profiles
        weights = model.day_counts
    outcomes = solve_days(reps, config.battery, config.degradation, lc.workers)
    if lc.method == "typical":
        annual = accumulate_typical(ZERO_ROW, outcomes)
    else:
        annual = accumulate_cluster(ZERO_ROW, outcomes, weights, len(days))
    ledger = fold_years(
        annual,
        method=lc.method,
        threshold=lc.threshold,
        accelerated_fade=lc.accelerated_fade,
        fade_multiplier=lc.fade_multiplier,
        fade_onset=lc.fade_onset,
        max_years=lc.max_years,
    )
    return LifecycleRun(ledger, annual, reps, outcomes, list(weights), model, typical)


def run_lifecycle(config, days: Sequence[MarketDay] | None = None) -> LifecycleLedger:
    return run_lifecycle_detailed(config, days).ledger
