"""Scenario configuration, demand data and time-series ingestion.

Config files are flat ``key = value`` text with units spelled out in the
key names, e.g. ``adder_eur_per_mwh = 200``. Values given in cts/kWh are
converted to EUR/MWh on load (10 cts/kWh = 100 EUR/MWh).
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .bev import BevFleetSpec
from .tariffs import AdderVariant, TariffKind, TariffScheme
from .techs import GenTechSpec, StorageTechSpec

log = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760


class ConfigError(ValueError):
    pass


class SeriesError(ValueError):
    pass


class Setup(str, Enum):
    NO_BEVS = "NoBEVs"
    WITH_BEVS = "WithBEVs"


@dataclass(frozen=True)
class ScenarioConfig:
    setup: Setup = Setup.NO_BEVS
    prosumer_count: float = 1000.0
    per_household_load: float = 5.0  # MWh/yr
    rooftop_cap_per_household: float = 15.0  # kW
    horizon: int = HOURS_PER_YEAR
    omega: float | None = None  # None: reference run without prosumer block
    tariff: TariffScheme = field(default_factory=TariffScheme)
    feed_in_tariff: float = 80.0  # EUR/MWh
    carbon_price: float = 0.0  # EUR/t
    v2h_degradation_cost: float | None = None  # EUR/MWh discharged; required WithBEVs
    cp_away_charging_adder: bool = False
    tiebreak: float = 1e-3  # EUR/MWh on curtailed rooftop output and household imports in the planner
    scenario_id: str = "scenario"

    def __post_init__(self) -> None:
        object.__setattr__(self, "setup", Setup(self.setup))
        if self.omega is not None:
            if not 0.0 <= self.omega <= 1.0:
                raise ConfigError(f"omega must lie in [0, 1], got {self.omega}")
            if self.prosumer_count <= 0:
                raise ConfigError("prosumer_count must be positive when omega is set")
        if self.horizon < 24 or self.horizon % 24:
            raise ConfigError(f"horizon must be >= 24 and a whole number of days, got {self.horizon}")
        if self.prosumer_count < 0 or self.per_household_load < 0 or self.rooftop_cap_per_household < 0:
            raise ConfigError("prosumer sizes must be non-negative")
        if self.feed_in_tariff < 0 or self.carbon_price < 0:
            raise ConfigError("feed-in tariff and carbon price must be non-negative")
        if self.v2h_degradation_cost is not None and self.v2h_degradation_cost < 0:
            raise ConfigError("v2h_degradation_cost must be non-negative")
        if self.setup is Setup.WITH_BEVS and self.v2h_degradation_cost is None:
            raise ConfigError("v2h_degradation_cost_eur_per_mwh is required in the WithBEVs setup")

    @property
    def period_weight(self) -> float:
        """Share of a year covered by the horizon; scales annualised costs."""
        return self.horizon / HOURS_PER_YEAR

    def with_omega(self, omega: float | None) -> "ScenarioConfig":
        return replace(self, omega=omega)

    def with_tariff(self, tariff: TariffScheme) -> "ScenarioConfig":
        return replace(self, tariff=tariff)


@dataclass(frozen=True)
class DemandBundle:
    """Exogenous demand of the system.

    ``base_load`` excludes prosumer households; their load is the
    per-household ``prosumer_profile`` times the prosumer count. Over a full
    year the profile sums to the annual household load; shorter horizons
    carry the matching share of it.
    """

    base_load: np.ndarray  # MWh per hour
    heat_load: np.ndarray
    prosumer_profile: np.ndarray  # MWh per hour and household
    hydrogen_offtake: float = 0.0  # MWh_H2 per hour, flat

    def __post_init__(self) -> None:
        arrays = {}
        for name in ("base_load", "heat_load", "prosumer_profile"):
            a = np.asarray(getattr(self, name), dtype=float).copy()
            if a.ndim != 1:
                raise SeriesError(f"{name} must be one-dimensional")
            if np.any(a < 0) or not np.all(np.isfinite(a)):
                raise SeriesError(f"{name} must be finite and non-negative")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            arrays[name] = a
        if len({a.size for a in arrays.values()}) != 1:
            raise SeriesError(f"demand series differ in length: { {k: v.size for k, v in arrays.items()} }")
        if self.hydrogen_offtake < 0:
            raise SeriesError("hydrogen offtake must be non-negative")

    @property
    def horizon(self) -> int:
        return self.base_load.size


def normalize_profile(raw, annual_load: float, horizon: int | None = None) -> np.ndarray:
    """Scale a household load shape to ``annual_load`` MWh per year.

    The returned series sums to ``annual_load * horizon / 8760``; for a
    full year that is exactly the annual load.
    """
    a = np.asarray(raw, dtype=float)
    horizon = a.size if horizon is None else horizon
    if a.size != horizon:
        raise SeriesError(f"profile has {a.size} hours, expected {horizon}")
    total = a.sum()
    if total <= 0:
        raise SeriesError("profile must have positive total")
    return a * (annual_load * horizon / HOURS_PER_YEAR / total)


def flat_hourly_offtake(annual_mwh: float, hours: int = HOURS_PER_YEAR) -> float:
    """Evenly spread annual hydrogen demand (MWh) over the hours of a year."""
    return annual_mwh / hours


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    techs: tuple[GenTechSpec, ...]
    storages: tuple[StorageTechSpec, ...]
    demand: DemandBundle
    bevs: BevFleetSpec | None = None

    def with_config(self, config: ScenarioConfig) -> "Scenario":
        return replace(self, config=config)


# ---------------------------------------------------------------- time series


@dataclass(frozen=True)
class SeriesSchema:
    name: str = "value"
    unit: str = ""
    minimum: float | None = 0.0
    maximum: float | None = None


CAPACITY_FACTOR = SeriesSchema("capacity_factor", "-", 0.0, 1.0)
ENERGY = SeriesSchema("energy", "MWh", 0.0, None)


def load_timeseries(path: str | Path, horizon: int, schema: SeriesSchema = ENERGY) -> np.ndarray:
    """Read a two-column CSV ``(timestamp|hour_index, value)``.

    Rows are validated against ``schema``; errors name the offending line.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SeriesError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if len(header) != 2 or header[0] not in ("timestamp", "hour_index", "hour") or header[1] != "value":
            raise SeriesError(f"{path}: header must be (timestamp, value) or (hour_index, value), got {header}")
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise SeriesError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                v = float(row[1])
            except ValueError:
                raise SeriesError(f"{path}:{lineno}: cannot parse value {row[1]!r}") from None
            if math.isnan(v) or math.isinf(v):
                raise SeriesError(f"{path}:{lineno}: non-finite value")
            if schema.minimum is not None and v < schema.minimum:
                raise SeriesError(f"{path}:{lineno}: {schema.name} {v} below {schema.minimum}")
            if schema.maximum is not None and v > schema.maximum:
                raise SeriesError(f"{path}:{lineno}: {schema.name} {v} above {schema.maximum}")
            values.append(v)
    if len(values) != horizon:
        raise SeriesError(f"{path}: expected {horizon} rows, found {len(values)}")
    return np.array(values)


def write_timeseries(path: str | Path, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["hour_index", "value"])
        for h, v in enumerate(np.asarray(values, dtype=float)):
            w.writerow([h, repr(float(v))])


# -------------------------------------------------------------------- configs


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_float(s: str) -> float | None:
    return None if s.strip().lower() in ("", "none", "reference") else float(s)


def _hours(s: str) -> tuple[int, ...]:
    """``8-19`` or ``8,9,10`` (inclusive ranges)."""
    out: set[int] = set()
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.update(range(int(a), int(b) + 1))
        else:
            out.add(int(part))
    return tuple(sorted(out))


CONFIG_SCHEMA: dict[str, Callable[[str], Any]] = {
    "scenario_id": str,
    "setup": lambda s: Setup(s.strip()).value,
    "prosumer_count": float,
    "per_household_load_mwh": float,
    "rooftop_cap_per_household_kw": float,
    "horizon_hours": int,
    "omega": _opt_float,
    "tariff_kind": lambda s: TariffKind(s.strip()).value,
    "tariff_variant": lambda s: AdderVariant(s.strip()).value,
    "adder_eur_per_mwh": float,
    "adder_cts_per_kwh": float,
    "feed_in_tariff_eur_per_mwh": float,
    "feed_in_tariff_cts_per_kwh": float,
    "carbon_price_eur_per_t": float,
    "v2h_degradation_cost_eur_per_mwh": float,
    "cp_away_charging_adder": _bool,
    "tiebreak_eur_per_mwh": float,
    "peak_hours": _hours,
    "offpeak_hours": _hours,
    # data sources
    "dataset": lambda s: s.strip().lower(),
    "gen_table": str,
    "storage_table": str,
    "base_load_csv": str,
    "heat_load_csv": str,
    "prosumer_profile_csv": str,
    "hydrogen_demand_mwh_per_yr": float,
    "bev_profiles": str,
    "bev_profile_count": int,
    "bev_battery_kwh": float,
    "bev_eta_charge": float,
    "bev_eta_discharge": float,
    "seed": int,
}
PREFIXED_KEYS = ("profile.", "inflow.")  # per-technology series paths


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines into typed values; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key.startswith(PREFIXED_KEYS):
            out[key] = value
            continue
        conv = CONFIG_SCHEMA.get(key)
        if conv is None:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    for a, b in (("adder_eur_per_mwh", "adder_cts_per_kwh"), ("feed_in_tariff_eur_per_mwh", "feed_in_tariff_cts_per_kwh")):
        if a in out and b in out:
            raise ConfigError(f"give either {a} or {b}, not both")
        if b in out:
            out[a] = out.pop(b) * 10.0
            log.info("converted %s to %s = %s EUR/MWh", b, a, out[a])
    return out


def config_hash(values: dict[str, Any]) -> str:
    """SHA-256 over the canonical JSON form of parsed config values."""
    canon = json.dumps(values, sort_keys=True, separators=(",", ":"), default=list)
    return hashlib.sha256(canon.encode()).hexdigest()


def scenario_config_from(values: dict[str, Any]) -> ScenarioConfig:
    tariff_kw: dict[str, Any] = {}
    if "tariff_kind" in values:
        tariff_kw["kind"] = values["tariff_kind"]
    if "tariff_variant" in values:
        tariff_kw["variant"] = values["tariff_variant"]
    if "adder_eur_per_mwh" in values:
        tariff_kw["adder"] = values["adder_eur_per_mwh"]
    if "peak_hours" in values:
        tariff_kw["peak_hours"] = frozenset(values["peak_hours"])
    if "offpeak_hours" in values:
        tariff_kw["offpeak_hours"] = frozenset(values["offpeak_hours"])
    mapping = {
        "scenario_id": "scenario_id",
        "setup": "setup",
        "prosumer_count": "prosumer_count",
        "per_household_load_mwh": "per_household_load",
        "rooftop_cap_per_household_kw": "rooftop_cap_per_household",
        "horizon_hours": "horizon",
        "omega": "omega",
        "feed_in_tariff_eur_per_mwh": "feed_in_tariff",
        "carbon_price_eur_per_t": "carbon_price",
        "v2h_degradation_cost_eur_per_mwh": "v2h_degradation_cost",
        "cp_away_charging_adder": "cp_away_charging_adder",
        "tiebreak_eur_per_mwh": "tiebreak",
    }
    kw = {attr: values[key] for key, attr in mapping.items() if key in values}
    try:
        return ScenarioConfig(tariff=TariffScheme(**tariff_kw), **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = parse_config_text(path.read_text())
    values["_base_dir"] = str(path.resolve().parent)
    return values
