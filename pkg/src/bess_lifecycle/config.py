"""INI-style run configuration with dotted ``section.key`` names.

Example::

    [battery]
    P_r = 10
    E_r = 20

    [degradation]
    chemistry = lfp

    [market]
    root = prices/
    year = 2021

    [lifecycle]
    method = cluster
    k = 5

Every key is validated against the type that owns it; unknown sections or
keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path

from . import degradation as deg
from . import finance
from .dispatch import BatteryParams
from .errors import BessError, ConfigError

BATTERY_KEYS = {f.name for f in dataclasses.fields(BatteryParams)}
DEGRADATION_KEYS = {f.name for f in dataclasses.fields(deg.DegradationParams)} | {"chemistry"}
COST_KEYS = {
    "cost_bat_pur",
    "cost_equ",
    "cost_sta",
    "k_dec",
    "recycle_ratio_bat",
    "recycle_ratio_equ",
    "income_rcy",
}


@dataclasses.dataclass(frozen=True)
class MarketConfig:
    root: Path | None = None
    year: int = 2021
    # rotate the reserve series by this many hours (time-zone alignment)
    reserve_shift_hours: int = 0


@dataclasses.dataclass(frozen=True)
class SignalConfig:
    regd: Path | None = None
    rega: Path | None = None
    cadence_s: float = 2.0


@dataclasses.dataclass(frozen=True)
class LifecycleConfig:
    method: str = "cluster"
    k: int = 5
    seed: int = 0
    metric: str = "dtw"
    threshold: float = 0.20
    accelerated_fade: bool = False
    fade_multiplier: float = 3.0
    fade_onset: float = 0.20
    max_years: int = 50
    workers: int = 1

    def __post_init__(self):
        if self.method not in ("typical", "cluster"):
            raise ConfigError("lifecycle.method must be 'typical' or 'cluster'")
        if self.metric not in ("dtw", "euclidean"):
            raise ConfigError("lifecycle.metric must be 'dtw' or 'euclidean'")
        if self.k < 1:
            raise ConfigError("lifecycle.k must be at least 1")
        if not 0 < self.threshold < 1:
            raise ConfigError("lifecycle.threshold must lie in (0, 1)")
        if self.fade_multiplier <= 0 or self.max_years < 1 or self.workers < 1:
            raise ConfigError("lifecycle.fade_multiplier, max_years and workers must be positive")


@dataclasses.dataclass(frozen=True)
class SensitivityConfig:
    scenarios: Path | None = None


@dataclasses.dataclass(frozen=True)
class Config:
    battery: BatteryParams
    degradation: deg.DegradationParams
    costs: finance.CostModel
    chemistry: str = "lfp"
    market: MarketConfig = MarketConfig()
    signal: SignalConfig = SignalConfig()
    lifecycle: LifecycleConfig = LifecycleConfig()
    sensitivity: SensitivityConfig = SensitivityConfig()

    def replace(self, **changes) -> "Config":
        return dataclasses.replace(self, **changes)


def default_config(chemistry: str = "lfp") -> Config:
    """Case-study parameters for ``chemistry`` with no market data attached."""
    costs = finance.cost_preset(chemistry)
    battery = BatteryParams(cost_bat_unit=finance.replacement_cost(costs))
    return Config(battery=battery, degradation=deg.preset(chemistry), costs=costs, chemistry=chemistry)


def _num(section, key, raw, kind=float):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {kind.__name__}") from None


def _check_keys(section, items, allowed):
    unknown = sorted(set(items) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}; allowed: {', '.join(sorted(allowed))}")


def _path(base: Path, raw: str) -> Path:
    p = Path(raw.strip())
    return p if p.is_absolute() else (base / p)


def parse_config(text: str, base_dir=".", chemistry: str | None = None) -> Config:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case (P_r, E_max, ...)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    base = Path(base_dir)
    known = {"battery", "degradation", "costs", "market", "signal", "lifecycle", "sensitivity"}
    unknown = sorted(set(parser.sections()) - known)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")

    def sec(name):
        return dict(parser[name]) if parser.has_section(name) else {}

    try:
        deg_items = sec("degradation")
        _check_keys("degradation", deg_items, DEGRADATION_KEYS)
        chem = (chemistry or deg_items.pop("chemistry", "lfp")).strip().lower()
        deg_items.pop("chemistry", None)
        degradation = deg.preset(chem).replace(**{k: _num("degradation", k, v) for k, v in deg_items.items()})

        cost_items = sec("costs")
        _check_keys("costs", cost_items, COST_KEYS)
        costs = finance.cost_preset(chem)
        values = {k: _num("costs", k, v) for k, v in cost_items.items()}
        if "income_rcy" in values:
            values["income_rcy_override"] = values.pop("income_rcy")
        costs = costs.replace(**values)

        bat_items = sec("battery")
        _check_keys("battery", bat_items, BATTERY_KEYS)
        values = {k: _num("battery", k, v) for k, v in bat_items.items()}
        E_r = values.get("E_r", BatteryParams.E_r)
        values.setdefault("E_min", 0.1 * E_r)
        values.setdefault("E_max", 0.9 * E_r)
        values.setdefault("cost_bat_unit", finance.replacement_cost(costs))
        battery = BatteryParams(**values)

        m = sec("market")
        _check_keys("market", m, {"root", "year", "reserve_shift_hours"})
        market = MarketConfig(
            root=_path(base, m["root"]) if "root" in m else None,
            year=_num("market", "year", m.get("year", "2021"), int),
            reserve_shift_hours=_num("market", "reserve_shift_hours", m.get("reserve_shift_hours", "0"), int),
        )
        if not -24 < market.reserve_shift_hours < 24:
            raise ConfigError("market.reserve_shift_hours must lie in (-24, 24)")

        s = sec("signal")
        _check_keys("signal", s, {"regd", "rega", "cadence_s"})
        signal = SignalConfig(
            regd=_path(base, s["regd"]) if "regd" in s else None,
            rega=_path(base, s["rega"]) if "rega" in s else None,
            cadence_s=_num("signal", "cadence_s", s.get("cadence_s", "2")),
        )
        if signal.cadence_s <= 0:
            raise ConfigError("signal.cadence_s must be positive")

        lc = sec("lifecycle")
        fields = {f.name: f.type for f in dataclasses.fields(LifecycleConfig)}
        _check_keys("lifecycle", lc, fields)
        kinds = {"method": str, "metric": str, "k": int, "seed": int, "max_years": int, "workers": int, "accelerated_fade": bool}
        values = {}
        for k, v in lc.items():
            kind = kinds.get(k, float)
            values[k] = v.strip() if kind is str else _num("lifecycle", k, v, kind)
        lifecycle = LifecycleConfig(**values)

        sn = sec("sensitivity")
        _check_keys("sensitivity", sn, {"scenarios"})
        sensitivity = SensitivityConfig(scenarios=_path(base, sn["scenarios"]) if "scenarios" in sn else None)
    except ConfigError:
        raise
    except BessError as exc:
        raise ConfigError(str(exc)) from None

    return Config(
        battery=battery,
        degradation=degradation,
        costs=costs,
        chemistry=chem,
        market=market,
        signal=signal,
        lifecycle=lifecycle,
        sensitivity=sensitivity,
    )


def load_config(path, chemistry: str | None = None) -> Config:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent, chemistry=chemistry)


def dump_config(cfg: Config) -> str:
    """Serialize ``cfg`` back to the INI form accepted by :func:`parse_config`."""
    out = configparser.ConfigParser(interpolation=None)
    out.optionxform = str
    out["battery"] = {k: repr(v) for k, v in dataclasses.asdict(cfg.battery).items()}
    d = dataclasses.asdict(cfg.degradation)
    out["degradation"] = {"chemistry": cfg.chemistry, **{k: repr(v) for k, v in d.items()}}
    c = dataclasses.asdict(cfg.costs)
    rcy = c.pop("income_rcy_override")
    costs = {k: repr(v) for k, v in c.items()}
    if rcy is not None:
        costs["income_rcy"] = repr(rcy)
    out["costs"] = costs
    market = {"year": str(cfg.market.year), "reserve_shift_hours": str(cfg.market.reserve_shift_hours)}
    if cfg.market.root is not None:
        market["root"] = str(cfg.market.root)
    out["market"] = market
    signal = {"cadence_s": repr(cfg.signal.cadence_s)}
    for key in ("regd", "rega"):
        if getattr(cfg.signal, key) is not None:
            signal[key] = str(getattr(cfg.signal, key))
    out["signal"] = signal
    out["lifecycle"] = {k: str(v) for k, v in dataclasses.asdict(cfg.lifecycle).items()}
    if cfg.sensitivity.scenarios is not None:
        out["sensitivity"] = {"scenarios": str(cfg.sensitivity.scenarios)}
    import io

    buf = io.StringIO()
    out.write(buf)
    return buf.getvalue()
