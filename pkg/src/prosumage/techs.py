"""Technology parameter records and their CSV tables.

Tables use GW/GWh for capacity bounds and kEUR per MW(h) for overnight
costs; specs store MW/MWh after ingestion. Cells with ``-`` are "not
applicable" and take neutral defaults.
"""

from __future__ import annotations

import csv
import decimal
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

INF = float("inf")

STORAGE_KINDS = ("storage", "electrolyzer", "compressor", "cavern", "reconversion")

GEN_COLUMNS = (
    "name",
    "cap_lower_gw",
    "cap_upper_gw",
    "interest_rate",
    "lifetime_yr",
    "overnight_keur_per_mw",
    "fixed_keur_per_mw_yr",
    "variable_eur_per_mwh",
    "efficiency",
    "carbon_t_per_mwh",
    "fuel_eur_per_mwh",
)
STORAGE_COLUMNS = (
    "name",
    "kind",
    "energy_lower_gwh",
    "energy_upper_gwh",
    "power_lower_gw",
    "power_upper_gw",
    "interest_rate",
    "lifetime_yr",
    "availability",
    "overnight_energy_keur_per_mwh",
    "overnight_power_in_keur_per_mw",
    "overnight_power_out_keur_per_mw",
    "eta_charge",
    "eta_discharge",
    "var_cost_charge_eur_per_mwh",
    "var_cost_discharge_eur_per_mwh",
)


class SpecError(ValueError):
    pass


def _profile(p) -> np.ndarray | None:
    if p is None:
        return None
    a = np.asarray(p, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GenTechSpec:
    name: str
    cap_lower: float = 0.0  # MW
    cap_upper: float = INF
    interest_rate: float = 0.04
    lifetime: float = 25.0
    overnight_cost: float = 0.0  # kEUR/MW
    fixed_cost: float = 0.0  # kEUR/MW/yr
    variable_cost: float = 0.0  # EUR/MWh
    efficiency: float = 1.0
    carbon_content: float = 0.0  # t per MWh of fuel
    fuel_cost: float = 0.0  # EUR per MWh of fuel
    availability_profile: np.ndarray | None = field(default=None, compare=False, repr=False)
    prosumer: bool = False  # rooftop PV behind the meter

    def __post_init__(self) -> None:
        object.__setattr__(self, "availability_profile", _profile(self.availability_profile))
        if self.cap_lower > self.cap_upper:
            raise SpecError(f"{self.name}: cap_lower {self.cap_lower} > cap_upper {self.cap_upper}")
        if not 0 < self.efficiency <= 1:
            raise SpecError(f"{self.name}: efficiency must be in (0, 1]")
        costs = (self.overnight_cost, self.fixed_cost, self.variable_cost, self.fuel_cost, self.carbon_content)
        if min(costs) < 0:
            raise SpecError(f"{self.name}: costs must be non-negative")
        if self.availability_profile is not None:
            prof = self.availability_profile
            if np.any(prof < 0) or np.any(prof > 1) or not np.all(np.isfinite(prof)):
                raise SpecError(f"{self.name}: availability profile must lie in [0, 1]")

    def marginal_cost(self, carbon_price: float = 0.0) -> float:
        """EUR per MWh of electricity: (fuel + CO2) per efficiency plus variable O&M."""
        return (self.fuel_cost + carbon_price * self.carbon_content) / self.efficiency + self.variable_cost

    def with_profile(self, profile) -> "GenTechSpec":
        return replace(self, availability_profile=profile)


@dataclass(frozen=True)
class StorageTechSpec:
    name: str
    kind: str = "storage"
    energy_lower: float = 0.0  # MWh
    energy_upper: float = INF
    power_in_lower: float = 0.0  # MW
    power_in_upper: float = INF
    power_out_lower: float = 0.0
    power_out_upper: float = INF
    interest_rate: float = 0.04
    lifetime: float = 25.0
    availability: float = 1.0
    overnight_energy: float = 0.0  # kEUR/MWh
    overnight_power_in: float = 0.0  # kEUR/MW
    overnight_power_out: float = 0.0
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    var_cost_charge: float = 0.0  # EUR/MWh
    var_cost_discharge: float = 0.0
    fixed_cost: float = 0.0  # kEUR/MWh/yr on energy capacity; not in the source tables
    inflow_profile: np.ndarray | None = field(default=None, compare=False, repr=False)
    grid_coupled: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "inflow_profile", _profile(self.inflow_profile))
        if self.kind not in STORAGE_KINDS:
            raise SpecError(f"{self.name}: unknown storage kind {self.kind!r}")
        for lo, hi in (
            (self.energy_lower, self.energy_upper),
            (self.power_in_lower, self.power_in_upper),
            (self.power_out_lower, self.power_out_upper),
        ):
            if lo > hi:
                raise SpecError(f"{self.name}: bounds out of order ({lo} > {hi})")
        if not (0 < self.eta_charge <= 1 and 0 < self.eta_discharge <= 1):
            raise SpecError(f"{self.name}: efficiencies must be in (0, 1]")
        if not 0 < self.availability <= 1:
            raise SpecError(f"{self.name}: availability must be in (0, 1]")
        if self.inflow_profile is not None and np.any(self.inflow_profile < 0):
            raise SpecError(f"{self.name}: inflow must be non-negative")

    def with_inflow(self, inflow) -> "StorageTechSpec":
        return replace(self, inflow_profile=inflow)


_DEC = decimal.Context(prec=80)


def _parse(raw: str, default: float, scale: int = 1) -> float:
    raw = raw.strip()
    if raw in ("", "-"):
        return default
    if raw.lower() in ("+inf", "inf"):
        return INF
    try:
        # decimal scaling keeps GW -> MW conversion exact under a write/read cycle
        return float(_DEC.multiply(decimal.Decimal(raw), scale))
    except decimal.InvalidOperation:
        raise SpecError(f"cannot parse number {raw!r}") from None


def _cell(row: dict, key: str, default: float, scale: int = 1) -> float:
    return _parse(row.get(key) or "", default, scale)


def _split(row: dict, key: str, default: float, scale: int = 1) -> tuple[float, float]:
    """Cells like ``7.476/7.381`` hold (charging, discharging) values."""
    raw = (row.get(key) or "").strip()
    if "/" in raw:
        a, b = raw.split("/", 1)
        return _parse(a, default, scale), _parse(b, default, scale)
    v = _parse(raw, default, scale)
    return v, v


def _fmt(v: float, scale: int = 1) -> str:
    if v == INF:
        return "+Inf"
    return str(_DEC.divide(decimal.Decimal(float(v)), scale).normalize(_DEC))


def _read(path: str | Path, required: tuple[str, ...]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or [])]
        if missing:
            raise SpecError(f"{path}: missing columns {missing}")
        return list(reader)


def resolve_rooftop_upper(raw: str, prosumer_count: float | None, kw_per_household: float) -> float:
    """Upper bound in MW for a rooftop row; ``30/75/150`` style cells list
    the GW bound for several prosumer counts and are resolved by count."""
    if "/" not in raw:
        return _parse(raw, INF, 1000)
    if prosumer_count is None:
        raise SpecError("rooftop PV upper bound depends on prosumer_count, which is not set")
    return prosumer_count * kw_per_household / 1000.0


def load_gen_table(
    path: str | Path, prosumer_count: float | None = None, rooftop_kw_per_household: float = 15.0
) -> list[GenTechSpec]:
    techs = []
    for row in _read(path, GEN_COLUMNS):
        name = row["name"].strip()
        prosumer = "rooftop" in name.lower() or (row.get("prosumer") or "").strip().lower() in ("1", "true", "yes")
        lower = _cell(row, "cap_lower_gw", 0.0, 1000)
        if prosumer:
            upper = resolve_rooftop_upper(row["cap_upper_gw"].strip(), prosumer_count, rooftop_kw_per_household)
        else:
            upper = _cell(row, "cap_upper_gw", INF, 1000)
        techs.append(
            GenTechSpec(
                name=name,
                cap_lower=lower,
                cap_upper=upper,
                interest_rate=_cell(row, "interest_rate", 0.0),
                lifetime=_cell(row, "lifetime_yr", 1.0),
                overnight_cost=_cell(row, "overnight_keur_per_mw", 0.0),
                fixed_cost=_cell(row, "fixed_keur_per_mw_yr", 0.0),
                variable_cost=_cell(row, "variable_eur_per_mwh", 0.0),
                efficiency=_cell(row, "efficiency", 1.0),
                carbon_content=_cell(row, "carbon_t_per_mwh", 0.0),
                fuel_cost=_cell(row, "fuel_eur_per_mwh", 0.0),
                prosumer=prosumer,
            )
        )
    return techs


def load_storage_table(path: str | Path) -> list[StorageTechSpec]:
    out = []
    for row in _read(path, STORAGE_COLUMNS):
        p_lo_in, p_lo_out = _split(row, "power_lower_gw", 0.0, 1000)
        p_hi_in, p_hi_out = _split(row, "power_upper_gw", INF, 1000)
        grid = (row.get("grid_coupled") or "true").strip().lower() not in ("0", "false", "no")
        out.append(
            StorageTechSpec(
                name=row["name"].strip(),
                kind=row["kind"].strip(),
                energy_lower=_cell(row, "energy_lower_gwh", 0.0, 1000),
                energy_upper=_cell(row, "energy_upper_gwh", INF, 1000),
                power_in_lower=p_lo_in,
                power_in_upper=p_hi_in,
                power_out_lower=p_lo_out,
                power_out_upper=p_hi_out,
                interest_rate=_cell(row, "interest_rate", 0.0),
                lifetime=_cell(row, "lifetime_yr", 1.0),
                availability=_cell(row, "availability", 1.0),
                overnight_energy=_cell(row, "overnight_energy_keur_per_mwh", 0.0),
                overnight_power_in=_cell(row, "overnight_power_in_keur_per_mw", 0.0),
                overnight_power_out=_cell(row, "overnight_power_out_keur_per_mw", 0.0),
                eta_charge=_cell(row, "eta_charge", 1.0),
                eta_discharge=_cell(row, "eta_discharge", 1.0),
                var_cost_charge=_cell(row, "var_cost_charge_eur_per_mwh", 0.0),
                var_cost_discharge=_cell(row, "var_cost_discharge_eur_per_mwh", 0.0),
                grid_coupled=grid,
            )
        )
    return out


def load_tech_tables(
    path_gen: str | Path,
    path_sto: str | Path,
    prosumer_count: float | None = None,
    rooftop_kw_per_household: float = 15.0,
) -> tuple[list[GenTechSpec], list[StorageTechSpec]]:
    return (
        load_gen_table(path_gen, prosumer_count, rooftop_kw_per_household),
        load_storage_table(path_sto),
    )


def bundled_table_paths() -> tuple[Path, Path]:
    """Paths of the packaged 2030 parameter tables."""
    base = resources.files("prosumage") / "data"
    return Path(str(base / "gen_techs.csv")), Path(str(base / "storage_techs.csv"))


def home_battery_from(utility: StorageTechSpec, name: str = "Home battery") -> StorageTechSpec:
    """Behind-the-meter battery with the utility battery's cost data."""
    return replace(
        utility,
        name=name,
        energy_lower=0.0,
        energy_upper=INF,
        power_in_lower=0.0,
        power_in_upper=INF,
        power_out_lower=0.0,
        power_out_upper=INF,
        grid_coupled=False,
    )


def write_gen_table(path: str | Path, techs: list[GenTechSpec]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GEN_COLUMNS + ("prosumer",))
        for t in techs:
            w.writerow(
                [
                    t.name,
                    _fmt(t.cap_lower, 1000),
                    _fmt(t.cap_upper, 1000),
                    _fmt(t.interest_rate),
                    _fmt(t.lifetime),
                    _fmt(t.overnight_cost),
                    _fmt(t.fixed_cost),
                    _fmt(t.variable_cost),
                    _fmt(t.efficiency),
                    _fmt(t.carbon_content),
                    _fmt(t.fuel_cost),
                    "true" if t.prosumer else "false",
                ]
            )


def write_storage_table(path: str | Path, storages: list[StorageTechSpec]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STORAGE_COLUMNS + ("grid_coupled",))
        for s in storages:
            w.writerow(
                [
                    s.name,
                    s.kind,
                    _fmt(s.energy_lower, 1000),
                    _fmt(s.energy_upper, 1000),
                    f"{_fmt(s.power_in_lower, 1000)}/{_fmt(s.power_out_lower, 1000)}",
                    f"{_fmt(s.power_in_upper, 1000)}/{_fmt(s.power_out_upper, 1000)}",
                    _fmt(s.interest_rate),
                    _fmt(s.lifetime),
                    _fmt(s.availability),
                    _fmt(s.overnight_energy),
                    _fmt(s.overnight_power_in),
                    _fmt(s.overnight_power_out),
                    _fmt(s.eta_charge),
                    _fmt(s.eta_discharge),
                    _fmt(s.var_cost_charge),
                    _fmt(s.var_cost_discharge),
                    "true" if s.grid_coupled else "false",
                ]
            )
