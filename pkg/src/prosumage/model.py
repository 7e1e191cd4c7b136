"""Central-planner capacity expansion and dispatch LP.

The planner minimises annualised investment plus hourly dispatch cost over
one horizon. Optionally a block of behind-the-meter prosumer assets (rooftop
PV, a home battery, and in the ``WithBEVs`` setup the household vehicles) is
added and tied to the system by a self-generation constraint.

Annualised cost terms are scaled by ``horizon / 8760`` so that short toy
horizons carry a matching share of the annual fixed cost.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .backends import SolveOptions, solve
from .bev import BevFleetSpec
from .lp import LpBuilder, LpProblem, LpSolution
from .scenario import DemandBundle, Scenario, ScenarioConfig, Setup
from .techs import GenTechSpec, SpecError, StorageTechSpec

KEUR = 1000.0
# set to 1 to verify invariants after every planner and household solve
INVARIANT_ENV = "PROSUMAGE_CHECK_INVARIANTS"


class ModelError(ValueError):
    pass


class InvariantError(ModelError):
    pass


def invariant_checks_enabled(check: bool | None = None) -> bool:
    if check is not None:
        return check
    return os.environ.get(INVARIANT_ENV, "") not in ("", "0")


class UndefinedRateError(ModelError):
    pass


def annuitize(overnight: float, rate: float, lifetime: float) -> float:
    """Equal yearly payments repaying ``overnight`` over ``lifetime`` years."""
    if lifetime < 1:
        raise ModelError(f"lifetime must be >= 1 year, got {lifetime}")
    if rate < 0:
        raise ModelError(f"interest rate must be >= 0, got {rate}")
    if rate == 0:
        return overnight / lifetime
    g = (1.0 + rate) ** lifetime
    return overnight * rate * g / (g - 1.0)


def _annual_cost(overnight: float, fixed: float, rate: float, lifetime: float) -> float:
    """EUR per unit and year from kEUR inputs."""
    if overnight == 0 and fixed == 0:
        return 0.0
    return (annuitize(overnight, rate, lifetime) + fixed) * KEUR


# ------------------------------------------------------------------- indices


@dataclass
class ProsumerIndex:
    """Column indices of the behind-the-meter block (hourly arrays of length H)."""

    rooftop_cap: int
    battery_energy: int
    battery_power_in: int
    battery_power_out: int
    r2l: np.ndarray
    r2b: np.ndarray
    r2ev: np.ndarray  # per BEV profile: shape (K, H); K = 0 in NoBEVs
    x: np.ndarray
    curtail: np.ndarray
    b2l: np.ndarray
    b2ev: np.ndarray  # (K, H)
    battery_soc: np.ndarray
    imports: np.ndarray
    v2h: np.ndarray  # (K, H), discharge of self-generated vehicle energy
    v2h_grid: np.ndarray  # (K, H), discharge of grid-charged vehicle energy
    balance_rows: np.ndarray
    rooftop_rows: np.ndarray


@dataclass
class BevIndex:
    soc: np.ndarray  # (K, H)
    grid_home: np.ndarray
    grid_away: np.ndarray
    soc_rows: np.ndarray  # (K, H)
    vehicles: np.ndarray  # (K,)
    soc_self: np.ndarray  # (K, H) or empty without a prosumer block
    drive_self: np.ndarray
    soc_self_rows: np.ndarray


@dataclass
class VariableIndex:
    horizon: int
    setup: Setup
    gens: dict[str, dict[str, np.ndarray | int]] = field(default_factory=dict)
    storages: dict[str, dict[str, np.ndarray | int]] = field(default_factory=dict)
    hydrogen: dict[str, np.ndarray | int] | None = None
    prosumer: ProsumerIndex | None = None
    bev: BevIndex | None = None
    balance_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    self_generation_row: int | None = None
    demand_grid: np.ndarray = field(default_factory=lambda: np.zeros(0))


# ------------------------------------------------------------- building blocks


@dataclass(frozen=True)
class ProsumerAssets:
    rooftop: GenTechSpec
    battery: StorageTechSpec
    households: float
    rooftop_cap: float  # MW upper bound of the aggregate rooftop capacity


def prosumer_assets(config: ScenarioConfig, techs, storages) -> ProsumerAssets:
    roofs = [t for t in techs if t.prosumer]
    homes = [s for s in storages if not s.grid_coupled]
    if len(roofs) != 1 or len(homes) != 1:
        raise ModelError(
            "a prosumer block needs exactly one rooftop PV technology and one non-grid-coupled home battery"
        )
    roof = roofs[0]
    cap = min(roof.cap_upper, config.prosumer_count * config.rooftop_cap_per_household / 1000.0)
    if roof.cap_lower > cap:
        raise ModelError("rooftop lower bound exceeds the per-household cap")
    return ProsumerAssets(roof, homes[0], config.prosumer_count, cap)


def _cf(spec: GenTechSpec, H: int) -> np.ndarray:
    if spec.availability_profile is None:
        return np.ones(H)
    if spec.availability_profile.size != H:
        raise ModelError(f"{spec.name}: availability profile has {spec.availability_profile.size} hours, expected {H}")
    return np.asarray(spec.availability_profile)


def _prev(idx: np.ndarray) -> np.ndarray:
    """Cyclic predecessor: the hour before the first is the last."""
    return np.roll(idx, 1, axis=-1)


def add_prosumer_block(
    b: LpBuilder,
    assets: ProsumerAssets,
    load: np.ndarray,
    fleet: BevFleetSpec | None,
    weight: float,
    *,
    import_cost=0.0,
    export_cost=0.0,
    curtail_cost=0.0,
    v2h_cost=0.0,
    ev_charge_cost=(0.0, 0.0),
) -> tuple[ProsumerIndex, BevIndex | None]:
    """Add rooftop PV, home battery and (optionally) household BEVs.

    ``load`` is the aggregate prosumer load in MWh per hour. Cost arguments
    price the grid-facing flows: the planner leaves them at zero and routes
    the flows through its energy balance, the prosumer problem prices them
    with the retail and feed-in tariffs.
    """
    H = load.size
    roof, bat = assets.rooftop, assets.battery
    cf = _cf(roof, H)

    cap_r = int(b.add_vars(
        "rooftop_cap", None, roof.cap_lower, assets.rooftop_cap,
        weight * _annual_cost(roof.overnight_cost, roof.fixed_cost, roof.interest_rate, roof.lifetime),
    )[0])
    ann = lambda o: weight * _annual_cost(o, 0.0, bat.interest_rate, bat.lifetime)  # noqa: E731
    cap_e = int(b.add_vars("hb_energy", None, bat.energy_lower, bat.energy_upper,
                           ann(bat.overnight_energy) + weight * bat.fixed_cost * KEUR)[0])
    cap_in = int(b.add_vars("hb_power_in", None, bat.power_in_lower, bat.power_in_upper, ann(bat.overnight_power_in))[0])
    cap_out = int(b.add_vars("hb_power_out", None, bat.power_out_lower, bat.power_out_upper, ann(bat.overnight_power_out))[0])

    r2l = b.add_vars("r2l", H)
    r2b = b.add_vars("r2b", H, cost=bat.var_cost_charge)
    x = b.add_vars("export", H, cost=export_cost)
    cur = b.add_vars("curtail", H, cost=curtail_cost)
    b2l = b.add_vars("b2l", H, cost=bat.var_cost_discharge)
    soc = b.add_vars("hb_soc", H)
    imp = b.add_vars("import", H, cost=import_cost)

    K = len(fleet.profiles) if fleet is not None else 0
    r2ev = np.zeros((K, H), dtype=int)
    b2ev = np.zeros((K, H), dtype=int)
    v2h = np.zeros((K, H), dtype=int)
    v2h_grid = np.zeros((K, H), dtype=int)
    for k in range(K):
        r2ev[k] = b.add_vars(f"r2ev_{k}", H)
        b2ev[k] = b.add_vars(f"b2ev_{k}", H, cost=bat.var_cost_discharge)
        v2h[k] = b.add_vars(f"v2h_self_{k}", H, cost=v2h_cost)
        v2h_grid[k] = b.add_vars(f"v2h_grid_{k}", H, cost=v2h_cost)

    # rooftop split: every MWh produced is used, stored, exported or curtailed
    rows = b.add_rows("rooftop", H, "E", 0.0)
    for cols in (r2l, r2b, x, cur, *r2ev):
        b.add_terms(rows, cols, 1.0)
    b.add_terms(rows, cap_r, -cf)

    # home battery, charged from rooftop only
    rows = b.add_rows("hb_soc", H, "E", 0.0)
    b.add_terms(rows, soc, 1.0)
    b.add_terms(rows, _prev(soc), -1.0)
    b.add_terms(rows, r2b, -bat.eta_charge)
    for cols in (b2l, *b2ev):
        b.add_terms(rows, cols, 1.0 / bat.eta_discharge)
    rows = b.add_rows("hb_soc_cap", H, "L", 0.0)
    b.add_terms(rows, soc, 1.0)
    b.add_terms(rows, cap_e, -1.0)
    rows = b.add_rows("hb_in_cap", H, "L", 0.0)
    b.add_terms(rows, r2b, 1.0)
    b.add_terms(rows, cap_in, -bat.availability)
    rows = b.add_rows("hb_out_cap", H, "L", 0.0)
    for cols in (b2l, *b2ev):
        b.add_terms(rows, cols, 1.0)
    b.add_terms(rows, cap_out, -bat.availability)

    bal = b.add_rows("prosumer_balance", H, "E", load)
    for cols in (r2l, b2l, imp, *v2h, *v2h_grid):
        b.add_terms(bal, cols, 1.0)

    bev_idx = None
    if fleet is not None:
        bev_idx = add_bev_block(
            b, fleet, charge_cost=ev_charge_cost,
            home=HomeLinks(inflows=list(zip(r2ev, b2ev)), v2h_self=v2h, v2h_grid=v2h_grid),
        )

    pidx = ProsumerIndex(
        rooftop_cap=cap_r, battery_energy=cap_e, battery_power_in=cap_in, battery_power_out=cap_out,
        r2l=r2l, r2b=r2b, r2ev=r2ev, x=x, curtail=cur, b2l=b2l, b2ev=b2ev, battery_soc=soc,
        imports=imp, v2h=v2h, v2h_grid=v2h_grid, balance_rows=bal, rooftop_rows=b.row_groups["rooftop"],
    )
    return pidx, bev_idx


@dataclass
class HomeLinks:
    """Behind-the-meter columns of the household vehicles, per profile."""

    inflows: list  # (rooftop to vehicle, home battery to vehicle)
    v2h_self: np.ndarray
    v2h_grid: np.ndarray


def add_bev_block(
    b: LpBuilder,
    fleet: BevFleetSpec,
    charge_cost=(0.0, 0.0),
    home: HomeLinks | None = None,
) -> BevIndex:
    """Vehicle batteries per profile with grid charging at home and away.

    With ``home`` links each battery holds two pools: grid-charged energy
    and self-generated energy (from rooftop or home battery). Both pools
    share the battery capacity and can serve driving and V2H, so losses of
    self-generated energy are known without pro-rating.
    """
    H, K = fleet.horizon, len(fleet.profiles)
    shape = (K, H)
    soc, gh, ga, soc_rows = (np.zeros(shape, dtype=int) for _ in range(4))
    soc_self = np.zeros(shape if home else (0, H), dtype=int)
    drive_self = np.zeros(shape if home else (0, H), dtype=int)
    self_rows = np.zeros(shape if home else (0, H), dtype=int)
    n = np.array([fleet.vehicles(k) for k in range(K)])
    e_cap = fleet.battery_capacity / 1000.0
    for k, prof in enumerate(fleet.profiles):
        drive = n[k] * prof.driving_demand
        soc[k] = b.add_vars(f"ev_soc_{k}", H, ub=n[k] * e_cap)
        gh[k] = b.add_vars(f"ev_grid_home_{k}", H, ub=n[k] * prof.availability_home, cost=charge_cost[0])
        ga[k] = b.add_vars(f"ev_grid_away_{k}", H, ub=n[k] * prof.availability_away, cost=charge_cost[1])

        rows = b.add_rows(f"ev_soc_{k}", H, "E", -drive)
        soc_rows[k] = rows
        b.add_terms(rows, soc[k], 1.0)
        b.add_terms(rows, _prev(soc[k]), -1.0)
        b.add_terms(rows, gh[k], -fleet.eta_charge)
        b.add_terms(rows, ga[k], -fleet.eta_charge)
        if home is None:
            continue

        soc_self[k] = b.add_vars(f"ev_soc_self_{k}", H, ub=n[k] * e_cap)
        drive_self[k] = b.add_vars(f"ev_drive_self_{k}", H, ub=drive)
        b.add_terms(rows, drive_self[k], -1.0)
        b.add_terms(rows, home.v2h_grid[k], 1.0 / fleet.eta_discharge)

        srows = b.add_rows(f"ev_soc_self_{k}", H, "E", 0.0)
        self_rows[k] = srows
        b.add_terms(srows, soc_self[k], 1.0)
        b.add_terms(srows, _prev(soc_self[k]), -1.0)
        for cols in home.inflows[k]:
            b.add_terms(srows, cols, -fleet.eta_charge)
        b.add_terms(srows, home.v2h_self[k], 1.0 / fleet.eta_discharge)
        b.add_terms(srows, drive_self[k], 1.0)

        r = b.add_rows(f"ev_cap_{k}", H, "L", n[k] * e_cap)
        b.add_terms(r, soc[k], 1.0)
        b.add_terms(r, soc_self[k], 1.0)
        r = b.add_rows(f"v2h_home_{k}", H, "L", n[k] * prof.availability_home)
        b.add_terms(r, home.v2h_self[k], 1.0)
        b.add_terms(r, home.v2h_grid[k], 1.0)
        r = b.add_rows(f"ev_home_conn_{k}", H, "L", n[k] * prof.availability_home)
        for cols in (gh[k], *home.inflows[k]):
            b.add_terms(r, cols, 1.0)
    return BevIndex(
        soc=soc, grid_home=gh, grid_away=ga, soc_rows=soc_rows, vehicles=n,
        soc_self=soc_self, drive_self=drive_self, soc_self_rows=self_rows,
    )


def loss_coefficients(assets: ProsumerAssets, fleet: BevFleetSpec | None) -> dict[str, float]:
    """Per-flow weights of the self-generated conversion losses ``L_h``."""
    bat = assets.battery
    out = {
        "r2b": 1.0 - bat.eta_charge,
        "hb_out": 1.0 / bat.eta_discharge - 1.0,
    }
    if fleet is not None:
        out["ev_in"] = 1.0 - fleet.eta_charge
        out["v2h"] = 1.0 / fleet.eta_discharge - 1.0
    return out


def self_generation_constraint(
    b: LpBuilder,
    pidx: ProsumerIndex,
    omega: float,
    setup: Setup,
    load_total: float,
    driving_total: float = 0.0,
    losses: dict[str, float] | None = None,
) -> int:
    """Add the annual self-generation row; returns its index.

    ``NoBEVs``: rooftop-to-load plus battery-to-load covers a share omega
    of the prosumer load. ``WithBEVs``: rooftop and battery flows into the
    vehicle also count, net of conversion losses, and driving demand joins
    the right-hand side.
    """
    if not 0.0 <= omega <= 1.0:
        raise ModelError(f"omega must lie in [0, 1], got {omega}")
    setup = Setup(setup)
    if setup is Setup.NO_BEVS:
        row = b.add_rows("self_generation", None, "G", omega * load_total)
        b.add_terms(row, pidx.r2l, 1.0)
        b.add_terms(row, pidx.b2l, 1.0)
        return int(row[0])
    if losses is None:
        raise ModelError("WithBEVs self-generation needs loss coefficients")
    row = b.add_rows("self_generation", None, "G", omega * (load_total + driving_total))
    b.add_terms(row, pidx.r2l, 1.0)
    b.add_terms(row, pidx.r2b, -losses["r2b"])
    b.add_terms(row, pidx.b2l, 1.0 - losses["hb_out"])
    for k in range(pidx.r2ev.shape[0]):
        b.add_terms(row, pidx.r2ev[k], 1.0 - losses["ev_in"])
        b.add_terms(row, pidx.b2ev[k], 1.0 - losses["hb_out"] - losses["ev_in"])
        b.add_terms(row, pidx.v2h[k], -losses["v2h"])
    return int(row[0])


# -------------------------------------------------------------------- planner


def _check_lengths(H: int, demand: DemandBundle, techs, storages, bevs) -> None:
    if demand.horizon != H:
        raise ModelError(f"demand series have {demand.horizon} hours, config horizon is {H}")
    for t in techs:
        if t.availability_profile is not None and t.availability_profile.size != H:
            raise ModelError(f"{t.name}: profile length {t.availability_profile.size} != horizon {H}")
    for s in storages:
        if s.inflow_profile is not None and s.inflow_profile.size != H:
            raise ModelError(f"{s.name}: inflow length {s.inflow_profile.size} != horizon {H}")
    if bevs is not None and bevs.horizon != H:
        raise ModelError(f"BEV profiles have {bevs.horizon} hours, config horizon is {H}")


def build_central_planner(
    config: ScenarioConfig,
    techs,
    storages,
    bevs: BevFleetSpec | None,
    demand: DemandBundle,
) -> tuple[LpProblem, VariableIndex]:
    H = config.horizon
    techs, storages = tuple(techs), tuple(storages)
    _check_lengths(H, demand, techs, storages, bevs)
    if config.setup is Setup.WITH_BEVS and bevs is None:
        raise ModelError("the WithBEVs setup requires BEV profiles")
    if config.setup is Setup.NO_BEVS:
        bevs = None
    w = config.period_weight
    b = LpBuilder(f"cp_{config.scenario_id}")
    idx = VariableIndex(horizon=H, setup=config.setup)

    with_prosumers = config.omega is not None
    prosumer_load = demand.prosumer_profile * config.prosumer_count
    grid_demand = demand.base_load + demand.heat_load
    if not with_prosumers:
        grid_demand = grid_demand + prosumer_load
    idx.demand_grid = grid_demand
    bal = b.add_rows("balance", H, "E", grid_demand)
    idx.balance_rows = bal

    for t in techs:
        if t.prosumer:
            continue
        if t.name in idx.gens:
            raise ModelError(f"duplicate technology {t.name!r}")
        key = f"g{len(idx.gens)}"
        cap = int(b.add_vars(f"{key}_cap", None, t.cap_lower, t.cap_upper,
                             w * _annual_cost(t.overnight_cost, t.fixed_cost, t.interest_rate, t.lifetime))[0])
        gen = b.add_vars(f"{key}_gen", H, cost=t.marginal_cost(config.carbon_price))
        rows = b.add_rows(f"{key}_avail", H, "L", 0.0)
        b.add_terms(rows, gen, 1.0)
        b.add_terms(rows, cap, -_cf(t, H))
        b.add_terms(bal, gen, 1.0)
        idx.gens[t.name] = {"cap": cap, "gen": gen}

    h2 = [s for s in storages if s.kind != "storage"]
    for s in storages:
        if s.kind != "storage" or not s.grid_coupled:
            continue
        if s.name in idx.storages:
            raise ModelError(f"duplicate storage {s.name!r}")
        key = f"s{len(idx.storages)}"
        ann = lambda o: w * _annual_cost(o, 0.0, s.interest_rate, s.lifetime)  # noqa: E731
        ce = int(b.add_vars(f"{key}_energy", None, s.energy_lower, s.energy_upper,
                            ann(s.overnight_energy) + w * s.fixed_cost * KEUR)[0])
        ci = int(b.add_vars(f"{key}_pin", None, s.power_in_lower, s.power_in_upper, ann(s.overnight_power_in))[0])
        co = int(b.add_vars(f"{key}_pout", None, s.power_out_lower, s.power_out_upper, ann(s.overnight_power_out))[0])
        ch = b.add_vars(f"{key}_charge", H, cost=s.var_cost_charge)
        dis = b.add_vars(f"{key}_discharge", H, cost=s.var_cost_discharge)
        soc = b.add_vars(f"{key}_soc", H)
        inflow = np.zeros(H) if s.inflow_profile is None else np.asarray(s.inflow_profile)
        rows = b.add_rows(f"{key}_soc", H, "E", inflow)
        b.add_terms(rows, soc, 1.0)
        b.add_terms(rows, _prev(soc), -1.0)
        b.add_terms(rows, ch, -s.eta_charge)
        b.add_terms(rows, dis, 1.0 / s.eta_discharge)
        entry = {"energy": ce, "power_in": ci, "power_out": co, "charge": ch, "discharge": dis, "soc": soc}
        if s.inflow_profile is not None:
            spill = b.add_vars(f"{key}_spill", H)
            b.add_terms(rows, spill, 1.0)
            entry["spill"] = spill
        for g, cols, cap, coef in (("socmax", soc, ce, 1.0), ("inmax", ch, ci, s.availability), ("outmax", dis, co, s.availability)):
            r = b.add_rows(f"{key}_{g}", H, "L", 0.0)
            b.add_terms(r, cols, 1.0)
            b.add_terms(r, cap, -coef)
        b.add_terms(bal, dis, 1.0)
        b.add_terms(bal, ch, -1.0)
        idx.storages[s.name] = entry

    if h2 or demand.hydrogen_offtake > 0:
        idx.hydrogen = _add_hydrogen_chain(b, h2, demand.hydrogen_offtake, H, w, bal)

    fleet_cost = (0.0, config.tariff.adder if config.cp_away_charging_adder else 0.0)
    if with_prosumers:
        assets = prosumer_assets(config, techs, storages)
        pidx, bidx = add_prosumer_block(
            b, assets, prosumer_load, bevs, w,
            curtail_cost=config.tiebreak,
            import_cost=config.tiebreak,
            v2h_cost=config.v2h_degradation_cost or 0.0,
            ev_charge_cost=fleet_cost,
        )
        b.add_terms(bal, pidx.x, 1.0)
        b.add_terms(bal, pidx.imports, -1.0)
        idx.prosumer = pidx
        idx.bev = bidx
        idx.self_generation_row = self_generation_constraint(
            b, pidx, config.omega, config.setup, float(prosumer_load.sum()),
            float(bevs.driving_total().sum()) if bevs is not None else 0.0,
            loss_coefficients(assets, bevs),
        )
    elif bevs is not None:
        idx.bev = add_bev_block(b, bevs, charge_cost=fleet_cost)
    if idx.bev is not None:
        b.add_terms(bal, idx.bev.grid_home, -1.0)
        b.add_terms(bal, idx.bev.grid_away, -1.0)

    return b.build(), idx


def _add_hydrogen_chain(b: LpBuilder, specs, offtake: float, H: int, w: float, bal) -> dict:
    """Electrolysis, compression, cavern storage and reconversion.

    The hub balance is in MWh of hydrogen: electrolysis output plus
    withdrawals equals injections, reconversion input and the offtake.
    """
    by = {s.kind: s for s in specs}
    missing = [k for k in ("electrolyzer", "compressor", "cavern", "reconversion") if k not in by]
    if missing:
        raise ModelError(f"hydrogen chain incomplete, missing {missing}")
    el, co, cav, rc = by["electrolyzer"], by["compressor"], by["cavern"], by["reconversion"]
    ann = lambda s, o: w * _annual_cost(o, s.fixed_cost, s.interest_rate, s.lifetime)  # noqa: E731
    el_cap = int(b.add_vars("h2_el_cap", None, el.power_in_lower, el.power_in_upper, ann(el, el.overnight_power_in))[0])
    co_cap = int(b.add_vars("h2_comp_cap", None, co.power_in_lower, co.power_in_upper, ann(co, co.overnight_power_in))[0])
    cav_cap = int(b.add_vars("h2_cav_cap", None, cav.energy_lower, cav.energy_upper, ann(cav, cav.overnight_energy))[0])
    rc_cap = int(b.add_vars("h2_rc_cap", None, rc.power_out_lower, rc.power_out_upper, ann(rc, rc.overnight_power_out))[0])
    el_in = b.add_vars("h2_el_in", H, cost=el.var_cost_charge)
    inj = b.add_vars("h2_inject", H, cost=co.var_cost_charge)
    wd = b.add_vars("h2_withdraw", H)
    soc = b.add_vars("h2_soc", H)
    rc_out = b.add_vars("h2_rc_out", H, cost=rc.var_cost_discharge)

    hub = b.add_rows("h2_hub", H, "E", offtake)
    b.add_terms(hub, el_in, el.eta_charge)
    b.add_terms(hub, wd, 1.0)
    b.add_terms(hub, inj, -1.0)
    b.add_terms(hub, rc_out, -1.0 / rc.eta_discharge)
    rows = b.add_rows("h2_soc", H, "E", 0.0)
    b.add_terms(rows, soc, 1.0)
    b.add_terms(rows, _prev(soc), -1.0)
    b.add_terms(rows, inj, -1.0)
    b.add_terms(rows, wd, 1.0)
    for g, cols, cap, coef in (
        ("h2_el_max", el_in, el_cap, el.availability),
        ("h2_comp_max", inj, co_cap, co.availability),
        ("h2_cav_max", soc, cav_cap, cav.availability),
        ("h2_rc_max", rc_out, rc_cap, rc.availability),
    ):
        r = b.add_rows(g, H, "L", 0.0)
        b.add_terms(r, cols, 1.0)
        b.add_terms(r, cap, -coef)
    b.add_terms(bal, el_in, -1.0)
    b.add_terms(bal, rc_out, 1.0)
    return {
        "electrolyzer": el_cap, "compressor": co_cap, "cavern": cav_cap, "reconversion": rc_cap,
        "el_in": el_in, "inject": inj, "withdraw": wd, "soc": soc, "rc_out": rc_out, "hub_rows": hub,
    }


# ----------------------------------------------------------------- solutions


@dataclass
class ProsumerDispatch:
    """Aggregate prosumer flows (MWh per hour) and capacities (MW, MWh)."""

    households: float
    rooftop_cap: float
    battery_energy: float
    battery_power_in: float
    battery_power_out: float
    load: np.ndarray
    rooftop_to_load: np.ndarray
    rooftop_to_battery: np.ndarray
    rooftop_to_ev: np.ndarray
    rooftop_to_grid: np.ndarray
    rooftop_curtailed: np.ndarray
    battery_out_to_load: np.ndarray
    battery_out_to_ev: np.ndarray
    battery_soc: np.ndarray
    grid_imports: np.ndarray
    ev_soc: np.ndarray
    ev_charge_home_grid: np.ndarray
    ev_charge_away_grid: np.ndarray
    v2h_discharge: np.ndarray
    v2h_self: np.ndarray  # part of v2h_discharge drawn from self-generated energy
    ev_driving: np.ndarray
    loss_series: np.ndarray

    @property
    def rooftop_kw_per_household(self) -> float:
        return self.rooftop_cap * 1000.0 / self.households

    @property
    def battery_kwh_per_household(self) -> float:
        return self.battery_energy * 1000.0 / self.households


@dataclass
class CpSolution:
    objective: float
    capacities: dict[str, float]
    storage_capacities: dict[str, dict[str, float]]
    dispatch: dict[str, np.ndarray]
    wholesale_prices: np.ndarray
    prosumer: ProsumerDispatch | None
    solver_status: str
    hydrogen: dict[str, float] | None = None

    @property
    def utility_battery_energy(self) -> float:
        return sum(v["energy"] for v in self.storage_capacities.values())


def loss_series(x: np.ndarray, pidx: ProsumerIndex, losses: dict[str, float]) -> np.ndarray:
    """Self-generated conversion losses per hour from flow values."""
    hb_out = x[pidx.b2l] + x[pidx.b2ev].sum(axis=0)
    L = losses["r2b"] * x[pidx.r2b] + losses["hb_out"] * hb_out
    if "ev_in" in losses and pidx.r2ev.shape[0]:
        L = L + losses["ev_in"] * (x[pidx.r2ev].sum(axis=0) + x[pidx.b2ev].sum(axis=0))
        L = L + losses["v2h"] * x[pidx.v2h].sum(axis=0)
    return L


def prosumer_dispatch(
    x: np.ndarray, pidx: ProsumerIndex, bidx: BevIndex | None, assets: ProsumerAssets,
    load: np.ndarray, fleet: BevFleetSpec | None,
) -> ProsumerDispatch:
    H = load.size
    zero = np.zeros(H)
    agg = lambda cols: x[cols].sum(axis=0) if cols.shape[0] else zero.copy()  # noqa: E731
    return ProsumerDispatch(
        households=assets.households,
        rooftop_cap=float(x[pidx.rooftop_cap]),
        battery_energy=float(x[pidx.battery_energy]),
        battery_power_in=float(x[pidx.battery_power_in]),
        battery_power_out=float(x[pidx.battery_power_out]),
        load=np.asarray(load, dtype=float),
        rooftop_to_load=x[pidx.r2l],
        rooftop_to_battery=x[pidx.r2b],
        rooftop_to_ev=agg(pidx.r2ev),
        rooftop_to_grid=x[pidx.x],
        rooftop_curtailed=x[pidx.curtail],
        battery_out_to_load=x[pidx.b2l],
        battery_out_to_ev=agg(pidx.b2ev),
        battery_soc=x[pidx.battery_soc],
        grid_imports=x[pidx.imports],
        ev_soc=agg(bidx.soc) + agg(bidx.soc_self) if bidx is not None else zero.copy(),
        ev_charge_home_grid=agg(bidx.grid_home) if bidx is not None else zero.copy(),
        ev_charge_away_grid=agg(bidx.grid_away) if bidx is not None else zero.copy(),
        v2h_discharge=agg(pidx.v2h) + agg(pidx.v2h_grid),
        v2h_self=agg(pidx.v2h),
        ev_driving=fleet.driving_total() if fleet is not None else zero.copy(),
        loss_series=loss_series(x, pidx, loss_coefficients(assets, fleet)),
    )


def extract_solution(raw: LpSolution, idx: VariableIndex, scenario: Scenario | None = None) -> CpSolution:
    """Structured result; wholesale prices are the balance-row duals."""
    raw.raise_for_status()
    x = raw.x
    caps = {name: float(x[e["cap"]]) for name, e in idx.gens.items()}
    sto = {
        name: {k: float(x[e[k]]) for k in ("energy", "power_in", "power_out")} for name, e in idx.storages.items()
    }
    dispatch: dict[str, np.ndarray] = {name: x[e["gen"]] for name, e in idx.gens.items()}
    for name, e in idx.storages.items():
        dispatch[f"{name}:charge"] = x[e["charge"]]
        dispatch[f"{name}:discharge"] = x[e["discharge"]]
        dispatch[f"{name}:soc"] = x[e["soc"]]
    h2 = None
    if idx.hydrogen is not None:
        h2 = {k: float(x[idx.hydrogen[k]]) for k in ("electrolyzer", "compressor", "cavern", "reconversion")}
        dispatch["h2:el_in"] = x[idx.hydrogen["el_in"]]
        dispatch["h2:rc_out"] = x[idx.hydrogen["rc_out"]]
    if idx.bev is not None:
        dispatch["bev:grid_home"] = x[idx.bev.grid_home].sum(axis=0)
        dispatch["bev:grid_away"] = x[idx.bev.grid_away].sum(axis=0)
    prices = np.asarray(raw.duals[idx.balance_rows], dtype=float) + 0.0

    pro = None
    if idx.prosumer is not None:
        if scenario is None:
            raise ModelError("scenario data is needed to extract prosumer flows")
        cfg = scenario.config
        assets = prosumer_assets(cfg, scenario.techs, scenario.storages)
        fleet = scenario.bevs if cfg.setup is Setup.WITH_BEVS else None
        pro = prosumer_dispatch(x, idx.prosumer, idx.bev, assets, scenario.demand.prosumer_profile * cfg.prosumer_count, fleet)
    return CpSolution(
        objective=raw.objective,
        capacities=caps,
        storage_capacities=sto,
        dispatch=dispatch,
        wholesale_prices=prices,
        prosumer=pro,
        solver_status=raw.status.value,
        hydrogen=h2,
    )


def self_generation_terms(p: ProsumerDispatch, setup: Setup) -> tuple[float, float]:
    """(left-hand side, right-hand side without omega) of the constraint."""
    setup = Setup(setup)
    if setup is Setup.NO_BEVS:
        return float(np.sum(p.rooftop_to_load + p.battery_out_to_load)), float(np.sum(p.load))
    lhs = np.sum(p.rooftop_to_load + p.battery_out_to_load + p.battery_out_to_ev + p.rooftop_to_ev - p.loss_series)
    return float(lhs), float(np.sum(p.load) + np.sum(p.ev_driving))


def realized_self_generation_rate(p: ProsumerDispatch, setup: Setup) -> float:
    lhs, rhs = self_generation_terms(p, setup)
    if rhs <= 0:
        raise UndefinedRateError("prosumer load is zero; self-generation rate undefined")
    return lhs / rhs


# ---------------------------------------------------------------- convenience


def solve_central_planner(
    scenario: Scenario, backend=None, options: SolveOptions | None = None, check: bool | None = None
) -> tuple[CpSolution, LpProblem, VariableIndex, LpSolution]:
    """Build, solve and extract. ``check`` (default from the environment)
    raises :class:`InvariantError` when the solution breaks an invariant."""
    cfg = scenario.config
    try:
        p, idx = build_central_planner(cfg, scenario.techs, scenario.storages, scenario.bevs, scenario.demand)
    except SpecError as exc:
        raise ModelError(str(exc)) from exc
    raw = solve(p, backend, options)
    if not raw.optimal:
        raw.raise_for_status()
    cp = extract_solution(raw, idx, scenario)
    if invariant_checks_enabled(check):
        rep = check_invariants(p, raw, idx, cp)
        if not rep.ok():
            raise InvariantError(f"planner solution breaks invariants: {rep}")
    return cp, p, idx, raw


# ----------------------------------------------------------------- invariants


@dataclass
class InvariantReport:
    balance_residual: float
    balance_scale: float
    prosumer_residual: float
    rooftop_residual: float
    soc_violation: float
    cyclic_residual: float
    structural_ok: bool
    messages: list[str] = field(default_factory=list)

    def ok(self, rtol: float = 1e-6) -> bool:
        scale = max(1.0, self.balance_scale)
        return (
            self.structural_ok
            and self.balance_residual <= rtol * scale
            and self.prosumer_residual <= rtol * scale
            and self.rooftop_residual <= rtol * scale
            and self.soc_violation <= rtol * scale
            and self.cyclic_residual <= rtol * scale
        )


def structural_checks(p: LpProblem, idx: VariableIndex) -> list[str]:
    """Home battery and vehicles must have no column touching the grid balance."""
    problems = []
    A = p.A.tocsc()
    bal = set(idx.balance_rows.tolist())
    pidx = idx.prosumer
    if pidx is not None:
        forbidden = {
            "home battery charge": pidx.r2b,
            "home battery discharge": pidx.b2l,
            "home battery to vehicle": pidx.b2ev.ravel(),
            "vehicle to home": np.concatenate([pidx.v2h.ravel(), pidx.v2h_grid.ravel()]),
            "rooftop to vehicle": pidx.r2ev.ravel(),
        }
        for label, cols in forbidden.items():
            for j in cols:
                rows = A.indices[A.indptr[j] : A.indptr[j + 1]]
                if bal.intersection(rows.tolist()):
                    problems.append(f"{label} column {p.var_names[j]} enters the grid balance")
                    break
        soc_rows = set(p.row_groups["hb_soc"].tolist())
        if idx.bev is not None:
            for j in np.concatenate([pidx.v2h.ravel(), pidx.v2h_grid.ravel()]):
                rows = A.indices[A.indptr[j] : A.indptr[j + 1]]
                if soc_rows.intersection(rows.tolist()):
                    problems.append(f"vehicle discharge {p.var_names[j]} charges the home battery")
                    break
        for name in p.var_groups:
            if "grid_to_hb" in name or "hb_to_grid" in name or "v2g" in name:
                problems.append(f"forbidden column group {name}")
    return problems


def check_invariants(p: LpProblem, sol: LpSolution, idx: VariableIndex, cp: CpSolution) -> InvariantReport:
    x = sol.x
    act = p.activity(x)
    bal = idx.balance_rows
    scale = float(np.max(np.abs(p.rhs[bal]))) if bal.size else 1.0
    bal_res = float(np.max(np.abs(act[bal] - p.rhs[bal]))) if bal.size else 0.0
    soc_viol, cyc = 0.0, 0.0
    for name, e in idx.storages.items():
        soc = x[e["soc"]]
        soc_viol = max(soc_viol, float(np.max(np.maximum(soc - x[e["energy"]], 0.0))), float(np.max(-soc)))
        r = p.row_groups[p.var_names[e["soc"][0]].split("[")[0]]
        cyc = max(cyc, float(np.max(np.abs(act[r] - p.rhs[r]))))
    pro_res = roof_res = 0.0
    pd = cp.prosumer
    if pd is not None:
        pro_res = float(np.max(np.abs(
            pd.rooftop_to_load + pd.battery_out_to_load + pd.v2h_discharge + pd.grid_imports - pd.load
        )))
        rows = idx.prosumer.rooftop_rows
        roof_res = float(np.max(np.abs(act[rows] - p.rhs[rows])))
        soc_viol = max(soc_viol, float(np.max(np.maximum(pd.battery_soc - pd.battery_energy, 0.0))))
        rows = p.row_groups["hb_soc"]
        cyc = max(cyc, float(np.max(np.abs(act[rows] - p.rhs[rows]))))
    if idx.bev is not None:
        for k in range(idx.bev.soc.shape[0]):
            s = x[idx.bev.soc[k]]
            soc_viol = max(soc_viol, float(np.max(np.maximum(s - p.ub[idx.bev.soc[k]], 0.0))), float(np.max(-s)))
            r = idx.bev.soc_rows[k]
            cyc = max(cyc, float(np.max(np.abs(act[r] - p.rhs[r]))))
            if idx.bev.soc_self.shape[0]:
                s = s + x[idx.bev.soc_self[k]]
                soc_viol = max(soc_viol, float(np.max(np.maximum(s - p.ub[idx.bev.soc[k]], 0.0))))
                r = idx.bev.soc_self_rows[k]
                cyc = max(cyc, float(np.max(np.abs(act[r] - p.rhs[r]))))
    msgs = structural_checks(p, idx)
    return InvariantReport(
        balance_residual=bal_res,
        balance_scale=scale,
        prosumer_residual=pro_res,
        rooftop_residual=roof_res,
        soc_violation=soc_viol,
        cyclic_residual=cyc,
        structural_ok=not msgs,
        messages=msgs,
    )
