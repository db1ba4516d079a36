"""Synthetic price years and regulation signals for demos and tests.

Real PJM/CAISO archives are not redistributable; these generators produce
days with the qualitative shapes seen in those markets.
"""

from __future__ import annotations

import calendar
import datetime as dt

import numpy as np

from .market_data import MarketDay, RegSignal

HOURS = np.arange(24)


def _bump(center: float, width: float) -> np.ndarray:
    d = np.minimum(np.abs(HOURS - center), 24 - np.abs(HOURS - center))
    return np.exp(-0.5 * (d / width) ** 2)


# Each shape: (energy, regulation capacity, regulation performance, reserve)
SHAPES = {
    # regulation-rich nights, reserve peak in the evening
    "night_regulation": (
        28 + 10 * _bump(8, 2.5) + 14 * _bump(19, 2.0),
        12 + 40 * (HOURS < 12),
        1.0 + 3.0 * (HOURS < 12),
        2 + 18 * _bump(20, 1.5),
    ),
    # strong evening energy peak, flat ancillary prices
    "evening_peak": (
        22 + 55 * _bump(18, 1.8),
        14 + 4 * _bump(12, 4.0),
        0.8 + 0.3 * _bump(12, 4.0),
        4 + 3 * _bump(7, 2.0),
    ),
    # midday solar dip, regulation peaking in the afternoon
    "midday_dip": (
        40 - 25 * _bump(12, 2.5) + 10 * _bump(20, 2.0),
        10 + 30 * _bump(15, 2.0),
        0.5 + 2.0 * _bump(15, 2.0),
        3 + 10 * _bump(9, 1.5),
    ),
    # morning and evening energy peaks: two arbitrage cycles a day
    "double_peak": (
        20 + 90 * _bump(8, 1.5) + 120 * _bump(19, 1.5),
        6 + 4 * _bump(14, 4.0),
        0.4 + 0.3 * _bump(14, 4.0),
        3 + 6 * _bump(19, 2.0),
    ),
}


def shaped_day(date: dt.date, shape: str, rng: np.random.Generator | None = None, noise: float = 0.03, scale: float = 1.0) -> MarketDay:
    """One day of ``shape`` with multiplicative noise of relative size ``noise``."""
    rng = rng or np.random.default_rng(0)
    vecs = []
    for base in SHAPES[shape]:
        base = np.asarray(base, dtype=float) * scale
        vecs.append(np.maximum(base * (1 + noise * rng.standard_normal(24)), 0.0))
    return MarketDay(date, *vecs)


def planted_year(year: int = 2021, seed: int = 0, shapes=("night_regulation", "evening_peak", "midday_dip"), noise: float = 0.03):
    """A full year where every day is a noisy copy of one of ``shapes``.

    Returns ``(days, labels)`` with ``labels[i]`` the shape index of day i.
    """
    rng = np.random.default_rng(seed)
    n = 366 if calendar.isleap(year) else 365
    start = dt.date(year, 1, 1)
    labels = rng.integers(len(shapes), size=n)
    days = [
        shaped_day(start + dt.timedelta(days=i), shapes[labels[i]], rng, noise)
        for i in range(n)
    ]
    return days, labels


def seasonal_year(year: int = 2021, seed: int = 0) -> list[MarketDay]:
    """A year mixing the shapes by season with weekend discounts."""
    rng = np.random.default_rng(seed)
    n = 366 if calendar.isleap(year) else 365
    start = dt.date(year, 1, 1)
    days = []
    for i in range(n):
        date = start + dt.timedelta(days=i)
        u = rng.random()
        if date.month in (6, 7, 8):
            shape = "evening_peak" if u < 0.6 else "double_peak"
        elif date.month in (3, 4, 5, 9, 10):
            shape = "midday_dip" if u < 0.3 else ("double_peak" if u < 0.6 else "night_regulation")
        else:
            shape = "double_peak" if u < 0.4 else "night_regulation"
        scale = 0.85 if date.weekday() >= 5 else 1.0
        days.append(shaped_day(date, shape, rng, noise=0.08, scale=scale))
    return days


def cluster4_day(date: dt.date = dt.date(2021, 4, 1)) -> MarketDay:
    """Regulation-dominated day: high overnight regulation, evening reserve peak."""
    energy = 30 + 4 * np.sin(2 * np.pi * (HOURS - 9) / 24)
    reg_cap = np.where(HOURS < 12, 45.0, 25.0)
    reg_perf = np.where(HOURS < 12, 4.0, 2.0)
    res = 3 + 12 * ((HOURS >= 17) & (HOURS <= 21))
    return MarketDay(date, energy, reg_cap, reg_perf, res)


def regd_signal(hours: int = 1, cadence_s: float = 2.0, seed: int = 0) -> RegSignal:
    """Fast, roughly energy-neutral signal (RegD-like)."""
    rng = np.random.default_rng(seed)
    n = int(hours * 3600 / cadence_s)
    t = np.arange(n) * cadence_s
    s = 0.6 * np.sin(2 * np.pi * t / 300.0) + 0.25 * np.sin(2 * np.pi * t / 47.0)
    s += 0.1 * rng.standard_normal(n)
    return RegSignal(np.clip(s, -1, 1), cadence_s)


def rega_signal(hours: int = 1, cadence_s: float = 2.0, seed: int = 0) -> RegSignal:
    """Slow, smooth signal (RegA-like)."""
    rng = np.random.default_rng(seed + 1)
    n = int(hours * 3600 / cadence_s)
    t = np.arange(n) * cadence_s
    s = 0.5 * np.sin(2 * np.pi * t / 1800.0) + 0.02 * rng.standard_normal(n)
    return RegSignal(np.clip(s, -1, 1), cadence_s)
