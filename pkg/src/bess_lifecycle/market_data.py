"""Hourly market prices, regulation signals and their statistics."""

from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DivisionByZeroMileage,
    MalformedFile,
    MissingData,
    NegativeAncillaryPrice,
    NonFiniteValue,
    TooShort,
)

HOURS = 24
PRICE_FIELDS = ("price_energy", "price_reg_cap", "price_reg_perf", "price_res")
ANCILLARY_FIELDS = ("price_reg_cap", "price_reg_perf", "price_res")


def _frozen_vector(values, name: str, length: int | None = HOURS) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or (length is not None and arr.shape[0] != length):
        raise MalformedFile(f"{name}: expected {length} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name}: non-finite value")
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class MarketDay:
    """One day of hourly prices.

    Energy in $/MWh (may be negative); regulation capacity, regulation
    performance and spinning reserve in $/MW (non-negative).
    """

    date: dt.date
    price_energy: np.ndarray
    price_reg_cap: np.ndarray
    price_reg_perf: np.ndarray
    price_res: np.ndarray

    def __post_init__(self):
        for name in PRICE_FIELDS:
            object.__setattr__(self, name, _frozen_vector(getattr(self, name), name))
        for name in ANCILLARY_FIELDS:
            vec = getattr(self, name)
            if np.any(vec < 0):
                hour = int(np.argmax(vec < 0)) + 1
                raise NegativeAncillaryPrice(f"{name} is negative at hour {hour}")

    def __eq__(self, other):
        if not isinstance(other, MarketDay):
            return NotImplemented
        return self.date == other.date and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in PRICE_FIELDS
        )

    def replace(self, **changes) -> "MarketDay":
        return dataclasses.replace(self, **changes)

    def scaled(self, factor: float) -> "MarketDay":
        """All four price families multiplied by ``factor``."""
        return self.replace(**{f: getattr(self, f) * factor for f in PRICE_FIELDS})


@dataclasses.dataclass(frozen=True, eq=False)
class RegSignal:
    """A normalized regulation signal sampled every ``cadence_s`` seconds."""

    samples: np.ndarray
    cadence_s: float = 2.0

    def __post_init__(self):
        if self.cadence_s <= 0:
            raise MalformedFile("cadence_s must be positive")
        arr = _frozen_vector(self.samples, "signal", length=None)
        if np.any(np.abs(arr) > 1.0):
            raise MalformedFile("regulation signal samples must lie in [-1, 1]")
        object.__setattr__(self, "samples", arr)

    @property
    def span_hours(self) -> float:
        return len(self.samples) * self.cadence_s / 3600.0


# ----------------------------------------------------------------------------
# CSV input / output


def _read_rows(path: Path, header: Sequence[str]) -> list[list[str]]:
    path = Path(path)
    if not path.is_file():
        raise MissingData(f"{path}: file not found")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows or [c.strip() for c in rows[0]] != list(header):
        raise MalformedFile(f"{path}: expected header {','.join(header)}")
    body = rows[1:]
    for row in body:
        if len(row) != len(header):
            raise MalformedFile(f"{path}: expected {len(header)} columns, got {row}")
    return body


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedFile(f"{where}: not a number: {text!r}") from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"{where}: non-finite value {text!r}")
    return value


def _read_hourly(path: Path, columns: Sequence[str]) -> list[np.ndarray]:
    body = _read_rows(path, ("hour", *columns))
    if len(body) != HOURS:
        raise MalformedFile(f"{path}: expected {HOURS} data rows, got {len(body)}")
    out = [np.empty(HOURS) for _ in columns]
    for i, row in enumerate(body):
        if row[0].strip() != str(i + 1):
            raise MalformedFile(f"{path}: hour column must run 1..24 ascending")
        for j in range(len(columns)):
            out[j][i] = _parse_float(row[j + 1], f"{path}:{i + 2}")
    return out


def load_market_day(energy_file, reg_file, res_file, date: dt.date) -> MarketDay:
    """Read the three hourly price files of one day.

    Missing or extra hours raise ``MalformedFile``; nothing is interpolated.
    """
    (energy,) = _read_hourly(Path(energy_file), ("price",))
    reg_cap, reg_perf = _read_hourly(Path(reg_file), ("cap_price", "perf_price"))
    (res,) = _read_hourly(Path(res_file), ("price",))
    return MarketDay(date, energy, reg_cap, reg_perf, res)


def _fmt(x: float) -> str:
    # repr round-trips a float exactly
    return repr(float(x))


def write_market_day(day: MarketDay, directory) -> Path:
    """Write ``energy.csv``, ``reg.csv`` and ``res.csv`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with (directory / "energy.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "price"])
        w.writerows([h + 1, _fmt(p)] for h, p in enumerate(day.price_energy))
    with (directory / "reg.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "cap_price", "perf_price"])
        w.writerows(
            [h + 1, _fmt(c), _fmt(p)]
            for h, (c, p) in enumerate(zip(day.price_reg_cap, day.price_reg_perf))
        )
    with (directory / "res.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "price"])
        w.writerows([h + 1, _fmt(p)] for h, p in enumerate(day.price_res))
    return directory


def day_directory(root, date: dt.date) -> Path:
    return Path(root) / date.isoformat()


def load_day_from_root(root, date: dt.date) -> MarketDay:
    d = day_directory(root, date)
    return load_market_day(d / "energy.csv", d / "reg.csv", d / "res.csv", date)


def write_day_to_root(day: MarketDay, root) -> Path:
    return write_market_day(day, day_directory(root, day.date))


def available_dates(root, year: int | None = None) -> list[dt.date]:
    """Dates under ``root`` that have a day directory, ascending."""
    out = []
    for child in Path(root).iterdir():
        if not child.is_dir():
            continue
        try:
            date = dt.date.fromisoformat(child.name)
        except ValueError:
            continue
        if year is None or date.year == year:
            out.append(date)
    return sorted(out)


def load_year(root, year: int) -> list[MarketDay]:
    """Every day of ``year`` found under ``root``, ascending by date."""
    dates = available_dates(root, year)
    if not dates:
        raise MissingData(f"no price data for {year} under {root}")
    return [load_day_from_root(root, d) for d in dates]


def load_signal(path, cadence_s: float = 2.0) -> RegSignal:
    """Read a ``index,value`` regulation signal CSV."""
    body = _read_rows(Path(path), ("index", "value"))
    values = [_parse_float(row[1], f"{path}:{i + 2}") for i, row in enumerate(body)]
    return RegSignal(np.array(values), cadence_s)


def write_signal(signal: RegSignal, path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value"])
        w.writerows([i, _fmt(v)] for i, v in enumerate(signal.samples))
    return path


# ----------------------------------------------------------------------------
# Signal statistics


def _samples(signal) -> np.ndarray:
    if isinstance(signal, RegSignal):
        return signal.samples
    return np.asarray(signal, dtype=float)


def mileage(signal) -> float:
    """Total absolute movement of a regulation signal."""
    s = _samples(signal)
    if s.shape[0] < 2:
        raise TooShort("mileage needs at least 2 samples")
    return float(np.sum(np.abs(np.diff(s))))


def mileage_ratio(rega, regd) -> float:
    """Mileage of the fast signal divided by mileage of the slow one."""
    a, d = _samples(rega), _samples(regd)
    if isinstance(rega, RegSignal) and isinstance(regd, RegSignal):
        if not math.isclose(rega.span_hours, regd.span_hours, rel_tol=1e-12):
            raise MalformedFile("RegA and RegD must cover the same time span")
    elif a.shape != d.shape:
        raise MalformedFile("RegA and RegD must cover the same time span")
    denom = mileage(a)
    if denom == 0.0:
        raise DivisionByZeroMileage("RegA mileage is zero")
    return mileage(d) / denom


def reg_energy_rate(regd: RegSignal) -> float:
    """Average hourly energy moved in each direction per MW of regulation.

    Half of the absolute throughput of every hour is attributed to charging
    and half to discharging; the result is averaged over the covered hours.
    """
    per_hour = 3600.0 / regd.cadence_s
    if not float(per_hour).is_integer():
        raise MalformedFile("cadence must divide one hour evenly")
    per_hour = int(per_hour)
    n = regd.samples.shape[0]
    if n < per_hour:
        raise TooShort("signal spans less than one hour")
    if n % per_hour:
        raise MalformedFile("signal does not cover an integer number of hours")
    hourly = np.abs(regd.samples).reshape(-1, per_hour).sum(axis=1) * regd.cadence_s / 3600.0
    return float(np.mean(0.5 * hourly))


def shift_series(day: MarketDay, field: str, hours: int) -> MarketDay:
    """Cyclically rotate one price vector by ``hours`` (positive = later)."""
    if field not in PRICE_FIELDS:
        raise ValueError(f"unknown price series {field!r}")
    if not -HOURS < hours < HOURS:
        raise ValueError("|hours| must be below 24")
    return day.replace(**{field: np.roll(getattr(day, field), hours)})


def align_days(days: Iterable[MarketDay], field: str, hours: int) -> list[MarketDay]:
    return [shift_series(d, field, hours) for d in days]
