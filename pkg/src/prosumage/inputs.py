"""Assemble a :class:`Scenario` from parsed config values."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Any

from .bev import BevError, BevSynthParams, load_bev_profiles, synth_bev_profiles
from .scenario import (
    CAPACITY_FACTOR,
    ENERGY,
    ConfigError,
    DemandBundle,
    Scenario,
    Setup,
    flat_hourly_offtake,
    load_timeseries,
    normalize_profile,
    scenario_config_from,
)
from .techs import bundled_table_paths, home_battery_from, load_tech_tables
from .toy import toy_scenario


def _path(values: dict[str, Any], key: str) -> Path:
    p = Path(values[key])
    if not p.is_absolute():
        p = Path(values.get("_base_dir", ".")) / p
    return p


def scenario_from_values(values: dict[str, Any], seed: int | None = None) -> Scenario:
    """``dataset = toy`` (default) builds the bundled toy system; ``dataset =
    files`` reads tables and series named in the config."""
    config = scenario_config_from(values)
    seed = values.get("seed", 1) if seed is None else seed
    dataset = values.get("dataset", "toy")
    if dataset == "toy":
        if config.setup is Setup.WITH_BEVS and not values.get("bev_profiles"):
            raise ConfigError("WithBEVs needs bev_profiles (a directory, or 'synthetic' to generate them)")
        sc = toy_scenario(config, seed=seed, hydrogen_mw=values.get("hydrogen_demand_mwh_per_yr", 0.0) / 8760.0)
        if config.setup is Setup.WITH_BEVS and values["bev_profiles"] != "synthetic":
            try:
                sc = replace(sc, bevs=load_bev_profiles(_path(values, "bev_profiles"), config.prosumer_count, config.horizon))
            except BevError as exc:
                raise ConfigError(str(exc)) from exc
        return sc
    if dataset != "files":
        raise ConfigError(f"unknown dataset {dataset!r}; use 'toy' or 'files'")

    H = config.horizon
    gen_path, sto_path = bundled_table_paths()
    if "gen_table" in values:
        gen_path = _path(values, "gen_table")
    if "storage_table" in values:
        sto_path = _path(values, "storage_table")
    for p in (gen_path, sto_path):
        if not p.exists():
            raise ConfigError(f"technology table not found: {p}")
    gens, stos = load_tech_tables(gen_path, sto_path, config.prosumer_count, config.rooftop_cap_per_household)

    profiles = {k[len("profile."):]: _path(values, k) for k in values if k.startswith("profile.")}
    inflows = {k[len("inflow."):]: _path(values, k) for k in values if k.startswith("inflow.")}
    names = {t.name for t in gens} | {s.name for s in stos}
    unknown = sorted((set(profiles) | set(inflows)) - names)
    if unknown:
        raise ConfigError(f"series given for unknown technologies {unknown}")
    techs = [t.with_profile(load_timeseries(profiles[t.name], H, CAPACITY_FACTOR)) if t.name in profiles else t for t in gens]
    storages = [s.with_inflow(load_timeseries(inflows[s.name], H, ENERGY)) if s.name in inflows else s for s in stos]
    if not any(not s.grid_coupled for s in storages):
        li = next((s for s in storages if s.name.lower().startswith("lithium")), None)
        if li is not None:
            storages.append(home_battery_from(li))

    for key in ("base_load_csv", "prosumer_profile_csv"):
        if key not in values:
            raise ConfigError(f"dataset 'files' needs {key}")
    base = load_timeseries(_path(values, "base_load_csv"), H, ENERGY)
    heat = load_timeseries(_path(values, "heat_load_csv"), H, ENERGY) if "heat_load_csv" in values else base * 0.0
    household = normalize_profile(load_timeseries(_path(values, "prosumer_profile_csv"), H, ENERGY), config.per_household_load, H)
    demand = DemandBundle(
        base_load=base,
        heat_load=heat,
        prosumer_profile=household,
        hydrogen_offtake=flat_hourly_offtake(values.get("hydrogen_demand_mwh_per_yr", 0.0)),
    )

    fleet = None
    if config.setup is Setup.WITH_BEVS:
        src = values.get("bev_profiles")
        if not src:
            raise ConfigError("WithBEVs needs bev_profiles (a directory, or 'synthetic' to generate them)")
        fleet_kw = {}
        for key, attr in (("bev_battery_kwh", "battery_capacity"), ("bev_eta_charge", "eta_charge"), ("bev_eta_discharge", "eta_discharge")):
            if key in values:
                fleet_kw[attr] = values[key]
        try:
            if src == "synthetic":
                params = BevSynthParams(horizon=H, vehicle_count=config.prosumer_count)
                fleet = synth_bev_profiles(seed, values.get("bev_profile_count", 4), params)
                fleet = replace(fleet, **fleet_kw)
            else:
                fleet = load_bev_profiles(_path(values, "bev_profiles"), config.prosumer_count, H, **fleet_kw)
        except BevError as exc:
            raise ConfigError(str(exc)) from exc
    return Scenario(config=config, techs=tuple(techs), storages=tuple(storages), demand=demand, bevs=fleet)
