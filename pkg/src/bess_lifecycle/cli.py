"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 a valid problem without a usable
answer (infeasible dispatch, no IRR root, battery never reaching end of life).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as dt
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import clustering, config as config_mod, finance, lifecycle, market_data as md, sensitivity
from .dispatch import energy_flows, simulate_day
from .errors import BessError, ConfigError, MalformedFile, OutcomeError, ValidationError


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8", newline="")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise UsageError(f"--date: expected YYYY-MM-DD, got {text!r}") from None


def _config(args) -> config_mod.Config:
    if not getattr(args, "config", None):
        raise UsageError("--config <path> is required for this command")
    cfg = config_mod.load_config(args.config, chemistry=getattr(args, "chemistry", None))
    lc = cfg.lifecycle
    overrides = {
        key: getattr(args, key)
        for key in ("method", "k", "seed", "metric", "threshold")
        if getattr(args, key, None) is not None
    }
    if getattr(args, "accelerated_fade", False):
        overrides["accelerated_fade"] = True
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if overrides:
        cfg = cfg.replace(lifecycle=dataclasses.replace(lc, **overrides))
    if cfg.signal.regd is not None:
        rate = md.reg_energy_rate(md.load_signal(cfg.signal.regd, cfg.signal.cadence_s))
        cfg = cfg.replace(battery=cfg.battery.replace(e_reg=rate))
    return cfg


# ----------------------------------------------------------------------------
# subcommands


def cmd_ingest(args) -> int:
    if args.energy or args.reg or args.res:
        if not (args.energy and args.reg and args.res and args.date and args.root):
            raise UsageError("single-day ingest needs --energy, --reg, --res, --date and --root")
        day = md.load_market_day(args.energy, args.reg, args.res, _date(args.date))
        md.write_day_to_root(day, args.root)
        dates = [day.date]
    else:
        if not args.root:
            raise UsageError("--root <price directory> is required")
        dates = md.available_dates(args.root, args.year)
        for d in dates:
            md.load_day_from_root(args.root, d)
    summary = {
        "root": str(args.root),
        "days": len(dates),
        "first": dates[0].isoformat() if dates else None,
        "last": dates[-1].isoformat() if dates else None,
    }
    _emit(_dump(summary), args.out)
    return 0


def cmd_mileage(args) -> int:
    if not args.regd:
        raise UsageError("--regd <signal csv> is required")
    regd = md.load_signal(args.regd, args.cadence)
    report = {"mileage_regd": md.mileage(regd), "e_reg": md.reg_energy_rate(regd)}
    if args.rega:
        rega = md.load_signal(args.rega, args.cadence)
        report["mileage_rega"] = md.mileage(rega)
        report["r_mileage"] = md.mileage_ratio(rega, regd)
    _emit(_dump(report), args.out)
    return 0


def _market_day(cfg, date: dt.date) -> md.MarketDay:
    if cfg.market.root is None:
        raise ConfigError("market.root is not configured")
    day = md.load_day_from_root(cfg.market.root, date)
    if cfg.market.reserve_shift_hours:
        day = md.shift_series(day, "price_res", cfg.market.reserve_shift_hours)
    return day


def cmd_simulate_day(args) -> int:
    cfg = _config(args)
    if not args.date:
        raise UsageError("--date YYYY-MM-DD is required")
    day = _market_day(cfg, _date(args.date))
    sol, result = simulate_day(day, cfg.battery, cfg.degradation)
    doc = result.to_dict()
    if args.schedule:
        bought, delivered = energy_flows(sol, cfg.battery)
        doc["schedule"] = {
            "cap_ch": sol.cap_ch.tolist(),
            "cap_dch": sol.cap_dch.tolist(),
            "cap_reg": sol.cap_reg.tolist(),
            "cap_res": sol.cap_res.tolist(),
            "soc": sol.soc.tolist(),
            "energy_bought": bought,
            "energy_delivered": delivered,
        }
    _emit(_dump(doc), args.out)
    return 0


def write_centroids_csv(model: clustering.ClusterModel, path) -> None:
    """One row per cluster: label, day count and the 72 feature values."""
    n = model.centroids.shape[1]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cluster", "days", *(f"f{i}" for i in range(n))])
        for j, (c, count) in enumerate(zip(model.centroids, model.day_counts)):
            w.writerow([j, count, *(repr(float(v)) for v in c)])


def write_profiles(model: clustering.ClusterModel, directory) -> None:
    """Cluster mean prices in the hourly price CSV layout, one folder each."""
    for j, profile in enumerate(model.profiles):
        md.write_market_day(profile, Path(directory) / f"cluster_{j}")


def cmd_cluster(args) -> int:
    cfg = _config(args)
    days = lifecycle.prepare_year(cfg)
    lc = cfg.lifecycle
    model = clustering.cluster_days(days, lc.k, lc.metric, lc.seed)
    _emit(model.to_json(), args.out)
    if args.centroids:
        write_centroids_csv(model, args.centroids)
    if args.profiles:
        write_profiles(model, args.profiles)
    return 0


def cmd_lifecycle(args) -> int:
    cfg = _config(args)
    run = lifecycle.run_lifecycle_detailed(cfg)
    _emit(run.ledger.to_json(), args.out)
    if args.clusters and run.cluster_model is not None:
        write_centroids_csv(run.cluster_model, args.clusters)
    return 0


def _read_ledger(path) -> lifecycle.LifecycleLedger:
    try:
        return lifecycle.LifecycleLedger.from_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise MalformedFile(f"{path}: not a lifecycle ledger ({exc})") from None


def _costs(args) -> finance.CostModel:
    if getattr(args, "config", None):
        return config_mod.load_config(args.config, chemistry=args.chemistry).costs
    return finance.cost_preset(args.chemistry or "lfp")


def read_flows_csv(path) -> finance.CashFlowSeries:
    """Cash flows from a ``year,flow`` CSV, rows in year order."""
    try:
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != ("year", "flow"):
                raise MalformedFile(f"{path}: expected header year,flow")
            rows = [(int(r["year"]), float(r["flow"])) for r in reader]
    except ValueError as exc:
        raise MalformedFile(f"{path}: {exc}") from None
    years = [y for y, _ in rows]
    if years != sorted(years) or len(set(years)) != len(years):
        raise MalformedFile(f"{path}: years must be strictly increasing")
    return finance.CashFlowSeries(np.array([f for _, f in rows]), start_year=years[0] if years else None)


def cmd_irr(args) -> int:
    if args.flows and Path(args.flows).is_file():
        flows = read_flows_csv(args.flows)
    elif args.flows:
        try:
            flows = finance.CashFlowSeries(np.array([float(x) for x in args.flows.split(",")]))
        except ValueError:
            raise UsageError("--flows: expected a year,flow CSV or comma-separated numbers, e.g. -100,60,60") from None
    elif args.ledger:
        flows = finance.build_cashflows(_read_ledger(args.ledger), _costs(args))
    else:
        raise UsageError("either --ledger <ledger.json> or --flows <c0,c1,...> is required")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        report = finance.irr_report(flows)
    report["flows"] = flows.flows.tolist()
    _emit(_dump(report), args.out)
    return 0


def cmd_lcos(args) -> int:
    if not args.ledger:
        raise UsageError("--ledger <ledger.json> is required")
    ledger = _read_ledger(args.ledger)
    costs = _costs(args)
    schedule = finance.stepped_discount_schedule(args.first_year, len(ledger.rows))
    inputs = finance.lcos_inputs_from_ledger(ledger, costs, schedule)
    report = {"lcos_usd_per_mwh": finance.lcos(inputs), "first_year": args.first_year, "discount_schedule": list(schedule)}
    _emit(_dump(report), args.out)
    return 0


def cmd_sensitivity(args) -> int:
    cfg = _config(args)
    path = args.scenarios or cfg.sensitivity.scenarios
    scenarios = sensitivity.read_scenarios(path) if path else []
    rows = sensitivity.run_sensitivity(cfg, scenarios)
    text = sensitivity.write_table(rows)
    if args.out and args.out != "-":
        Path(args.out).write_text(text, encoding="utf-8", newline="")
        print(sensitivity.format_table(rows))
    else:
        sys.stdout.write(text)
    return 0


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bess-lifecycle", description="Life-cycle economics of a grid battery across energy and ancillary markets.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="INI run configuration")
        sp.add_argument("--chemistry", choices=("lfp", "ncm"))
        sp.add_argument("--out", help="output file (default: stdout)")

    def pipeline(sp):
        sp.add_argument("--method", choices=("typical", "cluster"))
        sp.add_argument("--k", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--metric", choices=("dtw", "euclidean"))
        sp.add_argument("--threshold", type=float, help="end-of-life capacity loss fraction")
        sp.add_argument("--accelerated-fade", action="store_true")
        sp.add_argument("--workers", type=int)

    sp = sub.add_parser("ingest", help="validate price CSVs and store them under a price root")
    sp.add_argument("--root", help="price directory with one YYYY-MM-DD folder per day")
    sp.add_argument("--year", type=int)
    sp.add_argument("--energy")
    sp.add_argument("--reg")
    sp.add_argument("--res")
    sp.add_argument("--date")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("mileage", help="regulation signal mileage and energy rate")
    sp.add_argument("--regd")
    sp.add_argument("--rega")
    sp.add_argument("--cadence", type=float, default=2.0, help="seconds between samples")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_mileage)

    sp = sub.add_parser("simulate-day", help="optimal dispatch of one day")
    common(sp)
    sp.add_argument("--date")
    sp.add_argument("--schedule", action="store_true", help="include the hourly schedule")
    sp.set_defaults(func=cmd_simulate_day)

    sp = sub.add_parser("cluster", help="group the year's days by price shape")
    common(sp)
    pipeline(sp)
    sp.add_argument("--centroids", help="write centroids CSV here")
    sp.add_argument("--profiles", help="write cluster price profiles under this directory")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("lifecycle", help="simulate until end of life")
    common(sp)
    pipeline(sp)
    sp.add_argument("--clusters", help="write cluster centroids CSV here")
    sp.set_defaults(func=cmd_lifecycle)

    sp = sub.add_parser("irr", help="internal rate of return of a ledger or explicit flows")
    common(sp)
    sp.add_argument("--ledger")
    sp.add_argument("--flows", help="year,flow CSV file or comma-separated flows starting with year 0")
    sp.set_defaults(func=cmd_irr)

    sp = sub.add_parser("lcos", help="levelized cost of storage of a ledger")
    common(sp)
    sp.add_argument("--ledger")
    sp.add_argument("--first-year", type=int, default=2022, help="calendar year of operating year 1")
    sp.set_defaults(func=cmd_lcos)

    sp = sub.add_parser("sensitivity", help="scenario table")
    common(sp)
    pipeline(sp)
    sp.add_argument("--scenarios", help="CSV name,price_scale,n100_scale[,k_dec_override][,price_families]")
    sp.set_defaults(func=cmd_sensitivity)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except OutcomeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, BessError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
