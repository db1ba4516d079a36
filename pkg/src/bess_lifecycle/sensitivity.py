"""Scenario sweeps over prices, cycle life and battery cost."""

from __future__ import annotations

import csv
import dataclasses
import io
from pathlib import Path
from typing import Sequence

from . import finance
from .errors import DomainError, MalformedFile
from .lifecycle import run_lifecycle_detailed, prepare_year
from .market_data import ANCILLARY_FIELDS, MarketDay

COLUMNS = ("scenario", "income", "cost_op", "cost_loss", "cap_loss", "lifetime", "irr")
SCENARIO_COLUMNS = ("name", "price_scale", "n100_scale", "k_dec_override", "price_families")


@dataclasses.dataclass(frozen=True)
class ScenarioSpec:
    name: str
    price_scale: float = 1.0
    n100_scale: float = 1.0
    k_dec_override: float | None = None
    # "all" scales every price series, "ancillary" only regulation and reserve
    price_families: str = "all"

    def __post_init__(self):
        if not self.price_scale > 0 or not self.n100_scale > 0:
            raise DomainError(f"scenario {self.name!r}: multipliers must be positive")
        if self.k_dec_override is not None and not 0 <= self.k_dec_override <= 1:
            raise DomainError(f"scenario {self.name!r}: k_dec_override must lie in [0, 1]")
        if self.price_families not in ("all", "ancillary"):
            raise DomainError(f"scenario {self.name!r}: price_families must be 'all' or 'ancillary'")


STANDARD = ScenarioSpec("standard")


def scale_day(day: MarketDay, spec: ScenarioSpec) -> MarketDay:
    if spec.price_scale == 1.0:
        return day
    if spec.price_families == "all":
        return day.scaled(spec.price_scale)
    return day.replace(**{f: getattr(day, f) * spec.price_scale for f in ANCILLARY_FIELDS})


def apply_scenario(base, spec: ScenarioSpec):
    """Config with the scenario's cycle-life and battery-cost changes."""
    cfg = base
    if spec.n100_scale != 1.0:
        cfg = cfg.replace(degradation=cfg.degradation.replace(N_100=cfg.degradation.N_100 * spec.n100_scale))
    if spec.k_dec_override is not None:
        costs = cfg.costs.replace(k_dec=spec.k_dec_override)
        battery = cfg.battery.replace(cost_bat_unit=finance.replacement_cost(costs))
        cfg = cfg.replace(costs=costs, battery=battery)
    return cfg


def scenario_row(base, spec: ScenarioSpec, days: Sequence[MarketDay]) -> dict:
    """One table row; money and loss columns are first-year (annual) values."""
    cfg = apply_scenario(base, spec)
    run = run_lifecycle_detailed(cfg, [scale_day(d, spec) for d in days])
    flows = finance.build_cashflows(run.ledger, cfg.costs)
    return {
        "scenario": spec.name,
        "income": run.annual.income,
        "cost_op": run.annual.cost_op,
        "cost_loss": run.annual.cost_loss,
        "cap_loss": run.annual.cap_loss,
        "lifetime": run.ledger.end_of_life_year,
        "irr": finance.irr(flows),
    }


def run_sensitivity(base, scenarios: Sequence[ScenarioSpec], days: Sequence[MarketDay] | None = None) -> list[dict]:
    """Standard case first, then one row per scenario, in input order."""
    days = prepare_year(base, days)
    # the shift is already applied; do not rotate again inside the lifecycle run
    base = base.replace(market=dataclasses.replace(base.market, reserve_shift_hours=0))
    return [scenario_row(base, s, days) for s in [STANDARD, *scenarios]]


def write_table(rows: Sequence[dict], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([r["scenario"], *(repr(float(r[c])) for c in COLUMNS[1:5]), int(r["lifetime"]), repr(float(r["irr"]))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="")
    return text


def read_table(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise MalformedFile(f"{path}: expected header {','.join(COLUMNS)}")
        rows = []
        for r in reader:
            row = {"scenario": r["scenario"], "lifetime": int(r["lifetime"])}
            row.update({c: float(r[c]) for c in ("income", "cost_op", "cost_loss", "cap_loss", "irr")})
            rows.append(row)
    return rows


def format_table(rows: Sequence[dict]) -> str:
    """Human-readable table with 2-decimal money and percent columns."""
    head = f"{'scenario':<20}{'income $':>16}{'cost_op $':>14}{'cost_loss $':>14}{'cap_loss %':>12}{'life y':>8}{'IRR %':>9}"
    lines = [head]
    for r in rows:
        lines.append(
            f"{r['scenario']:<20}{r['income']:>16.2f}{r['cost_op']:>14.2f}{r['cost_loss']:>14.2f}"
            f"{100 * r['cap_loss']:>12.2f}{r['lifetime']:>8d}{100 * r['irr']:>9.2f}"
        )
    return "\n".join(lines)


def read_scenarios(path) -> list[ScenarioSpec]:
    """Scenario CSV: ``name,price_scale,n100_scale[,k_dec_override][,price_families]``."""
    path = Path(path)
    if not path.is_file():
        raise MalformedFile(f"scenario file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = tuple(reader.fieldnames or ())
        missing = {"name", "price_scale", "n100_scale"} - set(fields)
        extra = set(fields) - set(SCENARIO_COLUMNS)
        if missing or extra:
            raise MalformedFile(f"{path}: expected columns {','.join(SCENARIO_COLUMNS)} (last two optional)")
        out = []
        for i, r in enumerate(reader, start=2):
            try:
                k_dec = (r.get("k_dec_override") or "").strip()
                out.append(
                    ScenarioSpec(
                        name=r["name"].strip(),
                        price_scale=float(r["price_scale"]),
                        n100_scale=float(r["n100_scale"]),
                        k_dec_override=float(k_dec) if k_dec else None,
                        price_families=(r.get("price_families") or "all").strip() or "all",
                    )
                )
            except ValueError as exc:
                raise MalformedFile(f"{path}:{i}: {exc}") from None
    return out
