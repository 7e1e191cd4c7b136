"""Battery electric vehicle fleets.

A fleet is a set of representative hourly profiles, each standing for a
share of the vehicles. Profile series are per vehicle: driving demand in MWh
per hour, and connectable charging power at home and away in MW.

:func:`synth_bev_profiles` is a small seeded trip generator (home, work,
leisure) used when no externally simulated mobility profiles are at hand.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class BevError(ValueError):
    pass


@dataclass(frozen=True)
class BevProfile:
    driving_demand: np.ndarray  # MWh/h per vehicle
    availability_home: np.ndarray  # MW per vehicle
    availability_away: np.ndarray  # MW per vehicle

    def __post_init__(self) -> None:
        arrays = []
        for name in ("driving_demand", "availability_home", "availability_away"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1:
                raise BevError(f"{name} must be one-dimensional")
            if np.any(a < 0) or not np.all(np.isfinite(a)):
                raise BevError(f"{name} must be finite and non-negative")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
            arrays.append(a)
        if len({a.size for a in arrays}) != 1:
            raise BevError("profile series differ in length")
        d, home, away = arrays
        if np.any((home > 0) & (away > 0)):
            raise BevError("a vehicle cannot be connected at home and away in the same hour")
        if np.any((d > 0) & ((home > 0) | (away > 0))):
            raise BevError("a driving vehicle cannot be connected to a charger")

    @property
    def horizon(self) -> int:
        return self.driving_demand.size


@dataclass(frozen=True)
class BevFleetSpec:
    vehicle_count: float
    profiles: tuple[BevProfile, ...]
    scale_factors: tuple[float, ...] = ()
    battery_capacity: float = 45.0  # kWh per vehicle
    charger_power_home: float = 11.0  # kW
    charger_power_work: float = 11.0
    charger_power_public: float = 22.0
    eta_charge: float = 0.9
    eta_discharge: float = 0.9

    def __post_init__(self) -> None:
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if not self.profiles:
            raise BevError("fleet needs at least one profile")
        if not self.scale_factors:
            object.__setattr__(self, "scale_factors", tuple([1.0 / len(self.profiles)] * len(self.profiles)))
        if len(self.scale_factors) != len(self.profiles):
            raise BevError("one scale factor per profile required")
        if any(s < 0 for s in self.scale_factors) or not np.isclose(sum(self.scale_factors), 1.0):
            raise BevError("scale factors must be non-negative and sum to 1")
        if self.vehicle_count < 0:
            raise BevError("vehicle_count must be non-negative")
        if not (0 < self.eta_charge <= 1 and 0 < self.eta_discharge <= 1):
            raise BevError("efficiencies must be in (0, 1]")
        if len({p.horizon for p in self.profiles}) != 1:
            raise BevError("profiles differ in horizon")

    @property
    def horizon(self) -> int:
        return self.profiles[0].horizon

    def vehicles(self, k: int) -> float:
        return self.vehicle_count * self.scale_factors[k]

    def driving_total(self) -> np.ndarray:
        """Aggregate hourly driving demand of the fleet (MWh)."""
        return sum(self.vehicles(k) * p.driving_demand for k, p in enumerate(self.profiles))

    def with_count(self, vehicle_count: float) -> "BevFleetSpec":
        return replace(self, vehicle_count=vehicle_count)


@dataclass(frozen=True)
class BevSynthParams:
    """Trip model parameters; distances are integer km, probabilities per mille."""

    horizon: int = 8760
    vehicle_count: float = 1.0
    battery_kwh: float = 45.0
    consumption_kwh_per_km: float = 0.155
    charger_home_kw: float = 11.0
    charger_work_kw: float = 11.0
    charger_public_kw: float = 22.0
    commute_permille: int = 750  # weekday chance of commuting
    commute_km: tuple[int, int] = (10, 40)  # one way, uniform integer range
    leisure_permille: int = 600  # daily chance of a leisure trip
    leisure_km: tuple[int, int] = (10, 50)
    public_charger_permille: int = 500
    work_hours: tuple[int, int] = (8, 9)
    eta_charge: float = 0.9
    eta_discharge: float = 0.9
    extra: dict = field(default_factory=dict, compare=False)

    def max_daily_kwh(self) -> float:
        km = 0
        if self.commute_permille > 0:
            km += 2 * self.commute_km[1]
        if self.leisure_permille > 0:
            km += 2 * self.leisure_km[1]
        return km * self.consumption_kwh_per_km


def _synth_one(rng: np.random.Generator, p: BevSynthParams) -> BevProfile:
    H = p.horizon
    state = np.zeros(H, dtype=np.int8)  # 0 home, 1 driving, 2 work, 3 leisure+charger, 4 leisure
    drive_kwh = np.zeros(H)
    for day in range(H // 24):
        base = day * 24
        busy = np.zeros(24, dtype=bool)
        commute = day % 7 < 5 and rng.integers(0, 1000) < p.commute_permille
        if commute:
            dep = int(rng.integers(6, 9))
            stay = int(rng.integers(p.work_hours[0], p.work_hours[1] + 1))
            km = int(rng.integers(p.commute_km[0], p.commute_km[1] + 1))
            back = dep + 1 + stay
            if back < 24:
                state[base + dep] = 1
                state[base + dep + 1 : base + back] = 2
                state[base + back] = 1
                drive_kwh[base + dep] = drive_kwh[base + back] = km * p.consumption_kwh_per_km
                busy[dep : back + 1] = True
        if rng.integers(0, 1000) < p.leisure_permille:
            start = int(rng.integers(10, 20))
            stay = int(rng.integers(1, 4))
            km = int(rng.integers(p.leisure_km[0], p.leisure_km[1] + 1))
            charger = rng.integers(0, 1000) < p.public_charger_permille
            end = start + 1 + stay
            if end < 24 and not busy[start : end + 1].any():
                state[base + start] = 1
                state[base + start + 1 : base + end] = 3 if charger else 4
                state[base + end] = 1
                drive_kwh[base + start] = drive_kwh[base + end] = km * p.consumption_kwh_per_km
    home = np.where(state == 0, p.charger_home_kw, 0.0) / 1000.0
    away = np.select([state == 2, state == 3], [p.charger_work_kw, p.charger_public_kw], 0.0) / 1000.0
    return BevProfile(driving_demand=drive_kwh / 1000.0, availability_home=home, availability_away=away)


def synth_bev_profiles(seed: int, count: int, params: BevSynthParams | None = None) -> BevFleetSpec:
    """Generate ``count`` equally weighted profiles, bit-identical per seed."""
    params = params or BevSynthParams()
    if count < 1:
        raise BevError("count must be >= 1")
    if params.horizon < 24 or params.horizon % 24:
        raise BevError("horizon must be a positive multiple of 24 hours")
    if params.max_daily_kwh() > params.battery_kwh:
        raise BevError(
            f"daily trips of up to {params.max_daily_kwh():.1f} kWh exceed the {params.battery_kwh} kWh battery"
        )
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    profiles = []
    for _ in range(count):
        prof = _synth_one(rng, params)
        chargeable = params.eta_charge * (prof.availability_home.sum() + prof.availability_away.sum())
        if prof.driving_demand.sum() > chargeable:
            raise BevError("generated profile cannot recharge its driving demand over the horizon")
        profiles.append(prof)
    return BevFleetSpec(
        vehicle_count=params.vehicle_count,
        profiles=tuple(profiles),
        battery_capacity=params.battery_kwh,
        charger_power_home=params.charger_home_kw,
        charger_power_work=params.charger_work_kw,
        charger_power_public=params.charger_public_kw,
        eta_charge=params.eta_charge,
        eta_discharge=params.eta_discharge,
    )


BEV_COLUMNS = ("hour", "driving_mwh", "home_mw", "away_mw")


def write_bev_profiles(directory: str | Path, fleet: BevFleetSpec) -> None:
    """One CSV per profile plus ``fleet.csv`` with the scale factors."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "fleet.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["profile", "scale_factor"])
        for k, s in enumerate(fleet.scale_factors):
            w.writerow([f"profile_{k:03d}.csv", repr(float(s))])
    for k, p in enumerate(fleet.profiles):
        with open(d / f"profile_{k:03d}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(BEV_COLUMNS)
            for h in range(p.horizon):
                w.writerow(
                    [h, repr(float(p.driving_demand[h])), repr(float(p.availability_home[h])), repr(float(p.availability_away[h]))]
                )


def load_bev_profiles(directory: str | Path, vehicle_count: float, horizon: int, **fleet_kw) -> BevFleetSpec:
    d = Path(directory)
    index = d / "fleet.csv"
    if not index.exists():
        raise BevError(f"missing BEV fleet index {index}")
    with open(index, newline="") as fh:
        rows = list(csv.DictReader(fh))
    profiles, scales = [], []
    for row in rows:
        path = d / row["profile"]
        with open(path, newline="") as fh:
            data = list(csv.DictReader(fh))
        if len(data) != horizon:
            raise BevError(f"{path}: expected {horizon} rows, found {len(data)}")
        try:
            arr = np.array([[float(r[c]) for c in BEV_COLUMNS[1:]] for r in data])
        except (KeyError, ValueError) as exc:
            raise BevError(f"{path}: malformed row ({exc})") from exc
        profiles.append(BevProfile(arr[:, 0], arr[:, 1], arr[:, 2]))
        scales.append(float(row["scale_factor"]))
    return BevFleetSpec(vehicle_count=vehicle_count, profiles=tuple(profiles), scale_factors=tuple(scales), **fleet_kw)
