"""A small deterministic power system for tests and desk-scale experiments.

Costs come from the bundled 2030 parameter tables; capacity bounds are
dropped so that the toy can size every technology freely. Weather and
load shapes are synthetic and fully determined by the seed.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .bev import BevFleetSpec, BevSynthParams, synth_bev_profiles
from .scenario import DemandBundle, Scenario, ScenarioConfig, Setup, normalize_profile
from .techs import INF, bundled_table_paths, home_battery_from, load_tech_tables

TOY_GEN = ("Natural gas (OCGT)", "Natural gas (CCGT)", "Photovoltaic", "Rooftop photovoltaic", "Onshore wind")
H2_KINDS = ("electrolyzer", "compressor", "cavern", "reconversion")

# household load shape by hour of day (relative), morning and evening peaks
_HOUSEHOLD = np.array(
    [0.55, 0.45, 0.4, 0.4, 0.4, 0.45, 0.7, 1.0, 1.05, 0.9, 0.8, 0.8,
     0.85, 0.8, 0.75, 0.75, 0.85, 1.1, 1.4, 1.55, 1.45, 1.2, 0.95, 0.7]
)


def solar_profile(horizon: int, rng: np.random.Generator, dull: float = 0.1) -> np.ndarray:
    """Clear-sky bell times a daily cloudiness draw in ``[dull, 1]``."""
    hod = np.arange(horizon) % 24
    shape = np.clip(np.sin(np.pi * (hod - 6) / 13.0), 0.0, None)
    days = horizon // 24
    clear = rng.uniform(dull, 1.0, size=days).repeat(24)
    return np.round(0.5 * shape * clear, 6)


def wind_profile(horizon: int, rng: np.random.Generator, mean: float = 0.3) -> np.ndarray:
    z = np.empty(horizon)
    z[0] = 0.0
    eps = rng.normal(0.0, 0.25, size=horizon)
    for h in range(1, horizon):
        z[h] = 0.93 * z[h - 1] + eps[h]
    return np.round(np.clip(mean * np.exp(z - z.mean()), 0.0, 1.0), 6)


# horizon, feed-in tariff and V2H wear cost used by the acceptance runs
TOY_HORIZON = 336
TOY_FEED_IN = 20.0
TOY_V2H_COST = 20.0


def toy_config(**overrides) -> ScenarioConfig:
    """Config for the desk-scale experiments; keyword overrides win."""
    base = dict(horizon=TOY_HORIZON, feed_in_tariff=TOY_FEED_IN, scenario_id="toy")
    if overrides.get("setup") is Setup.WITH_BEVS:
        base["v2h_degradation_cost"] = TOY_V2H_COST
    base.update(overrides)
    return ScenarioConfig(**base)


def toy_scenario(
    config: ScenarioConfig | None = None,
    seed: int = 1,
    base_load_mw: float = 2.5,
    heat_load_mw: float = 0.5,
    hydrogen_mw: float = 0.0,
    bev_profiles: int = 4,
) -> Scenario:
    """Toy scenario with PV, wind, two gas turbines and lithium-ion storage.

    ``hydrogen_mw`` > 0 adds the electrolysis/cavern/reconversion chain
    with that flat offtake. BEV profiles are generated when the config
    asks for the ``WithBEVs`` setup, one vehicle per household.
    """
    config = config or ScenarioConfig(horizon=168)
    H = config.horizon
    rng = np.random.Generator(np.random.PCG64(seed))
    pv = solar_profile(H, rng)
    wind = wind_profile(H, rng)

    gen_path, sto_path = bundled_table_paths()
    gens, stos = load_tech_tables(gen_path, sto_path, config.prosumer_count, config.rooftop_cap_per_household)
    profiles = {"Photovoltaic": pv, "Rooftop photovoltaic": pv, "Onshore wind": wind}
    techs = []
    for t in gens:
        if t.name not in TOY_GEN:
            continue
        upper = t.cap_upper if t.prosumer else INF
        techs.append(replace(t, cap_lower=0.0, cap_upper=upper, availability_profile=profiles.get(t.name)))

    li = next(s for s in stos if s.name.startswith("Lithium"))
    li = replace(li, energy_lower=0.0, power_in_lower=0.0, power_out_lower=0.0)
    storages = [li, home_battery_from(li)]
    if hydrogen_mw > 0:
        storages += [s for s in stos if s.kind in H2_KINDS]

    hod = np.arange(H) % 24
    base = base_load_mw * (1.0 + 0.18 * np.sin(2 * np.pi * (hod - 9) / 24.0)) * rng.uniform(0.97, 1.03, size=H)
    heat = heat_load_mw * (1.0 + 0.3 * np.cos(2 * np.pi * hod / 24.0))
    household = normalize_profile(_HOUSEHOLD[hod], config.per_household_load, H)
    demand = DemandBundle(
        base_load=np.round(base, 6), heat_load=np.round(heat, 6), prosumer_profile=household, hydrogen_offtake=hydrogen_mw
    )

    fleet: BevFleetSpec | None = None
    if config.setup is Setup.WITH_BEVS:
        fleet = synth_bev_profiles(seed, bev_profiles, BevSynthParams(horizon=H, vehicle_count=config.prosumer_count))
    return Scenario(config=config, techs=tuple(techs), storages=tuple(storages), demand=demand, bevs=fleet)
