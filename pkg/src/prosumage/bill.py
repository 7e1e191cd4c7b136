"""Prosumer electricity bills.

:func:`compute_bill_cp` prices the prosumer decisions of a planner solution.
:func:`solve_prosumer_lp` lets the households choose those decisions
themselves against retail and feed-in tariffs. Both use the same
behind-the-meter topology, so the planner's choice is always feasible for
the household problem and its bill can only be lower.

Bills cover the modelled horizon and all households; ``per_household``
divides by the household count.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .backends import SolveOptions, solve
from .lp import LpBuilder, LpProblem
from .model import (
    KEUR,
    CpSolution,
    ModelError,
    ProsumerAssets,
    ProsumerDispatch,
    InvariantError,
    _annual_cost,
    add_prosumer_block,
    invariant_checks_enabled,
    prosumer_assets,
    prosumer_dispatch,
    realized_self_generation_rate,
)
from .scenario import Scenario, Setup
from .tariffs import RetailPriceSeries, TariffScheme, build_tariff


class BillError(ValueError):
    pass


@dataclass(frozen=True)
class BillBreakdown:
    capex: float
    opex: float
    import_cost: float
    feed_in_revenue: float
    households: float = 1.0

    @property
    def total(self) -> float:
        return self.capex + self.opex + self.import_cost - self.feed_in_revenue

    @property
    def per_household(self) -> float:
        return self.total / self.households

    def as_dict(self) -> dict[str, float]:
        d = asdict(self)
        d["total"] = self.total
        d["per_household"] = self.per_household
        return d


def _capex_opex(assets: ProsumerAssets, d: ProsumerDispatch, weight: float, v2h_cost: float) -> tuple[float, float]:
    roof, bat = assets.rooftop, assets.battery
    capex = weight * (
        _annual_cost(roof.overnight_cost, 0.0, roof.interest_rate, roof.lifetime) * d.rooftop_cap
        + _annual_cost(bat.overnight_energy, 0.0, bat.interest_rate, bat.lifetime) * d.battery_energy
        + _annual_cost(bat.overnight_power_in, 0.0, bat.interest_rate, bat.lifetime) * d.battery_power_in
        + _annual_cost(bat.overnight_power_out, 0.0, bat.interest_rate, bat.lifetime) * d.battery_power_out
    )
    fixed = weight * KEUR * (roof.fixed_cost * d.rooftop_cap + bat.fixed_cost * d.battery_energy)
    variable = (
        bat.var_cost_charge * d.rooftop_to_battery.sum()
        + bat.var_cost_discharge * (d.battery_out_to_load.sum() + d.battery_out_to_ev.sum())
        + v2h_cost * d.v2h_discharge.sum()
    )
    return float(capex), float(fixed + variable)


def bill_from_dispatch(
    d: ProsumerDispatch, assets: ProsumerAssets, retail: RetailPriceSeries | np.ndarray, f: float,
    weight: float, v2h_cost: float = 0.0,
) -> BillBreakdown:
    r = retail.retail if isinstance(retail, RetailPriceSeries) else np.asarray(retail, dtype=float)
    if r.size != d.load.size:
        raise BillError(f"tariff has {r.size} hours, dispatch has {d.load.size}")
    capex, opex = _capex_opex(assets, d, weight, v2h_cost)
    grid = d.grid_imports + d.ev_charge_home_grid + d.ev_charge_away_grid
    return BillBreakdown(
        capex=capex,
        opex=opex,
        import_cost=float(r @ grid),
        feed_in_revenue=float(f * d.rooftop_to_grid.sum()),
        households=d.households,
    )


def compute_bill_cp(sol: CpSolution, tariff: RetailPriceSeries, f: float, scenario: Scenario) -> BillBreakdown:
    """Bill implied by the prosumer decisions of a planner solution."""
    if sol.prosumer is None:
        raise BillError("solution has no prosumer block; reference runs have no bill")
    cfg = scenario.config
    assets = prosumer_assets(cfg, scenario.techs, scenario.storages)
    return bill_from_dispatch(sol.prosumer, assets, tariff, f, cfg.period_weight, cfg.v2h_degradation_cost or 0.0)


@dataclass
class ProsumerLpSolution:
    dispatch: ProsumerDispatch
    bill: BillBreakdown
    objective: float
    self_generation_rate: float
    retail: RetailPriceSeries
    status: str = "optimal"

    @property
    def rooftop_kw_per_household(self) -> float:
        return self.dispatch.rooftop_kw_per_household

    @property
    def battery_kwh_per_household(self) -> float:
        return self.dispatch.battery_kwh_per_household


def build_prosumer_lp(
    prices: np.ndarray, scheme: TariffScheme, f: float, scenario: Scenario
) -> tuple[LpProblem, object, RetailPriceSeries]:
    """Household bill minimisation against prices from a planner solve."""
    cfg = scenario.config
    prices = np.asarray(prices, dtype=float)
    if prices.size != cfg.horizon:
        raise BillError(f"price series has {prices.size} hours, horizon is {cfg.horizon}")
    retail = build_tariff(scheme, prices)
    assets = prosumer_assets(cfg, scenario.techs, scenario.storages)
    fleet = scenario.bevs if cfg.setup is Setup.WITH_BEVS else None
    if cfg.setup is Setup.WITH_BEVS and fleet is None:
        raise ModelError("the WithBEVs setup requires BEV profiles")
    b = LpBuilder(f"prosumer_{cfg.scenario_id}")
    load = scenario.demand.prosumer_profile * cfg.prosumer_count
    r = retail.retail
    pidx, bidx = add_prosumer_block(
        b, assets, load, fleet, cfg.period_weight,
        import_cost=r, export_cost=-f, v2h_cost=cfg.v2h_degradation_cost or 0.0, ev_charge_cost=(r, r),
    )
    return b.build(), (pidx, bidx, assets, load, fleet), retail


def solve_prosumer_lp(
    prices: np.ndarray, scheme: TariffScheme, f: float, scenario: Scenario, backend=None,
    options: SolveOptions | None = None, check: bool | None = None,
) -> ProsumerLpSolution:
    p, (pidx, bidx, assets, load, fleet), retail = build_prosumer_lp(prices, scheme, f, scenario)
    raw = solve(p, backend, options)
    raw.raise_for_status()
    d = prosumer_dispatch(raw.x, pidx, bidx, assets, load, fleet)
    if invariant_checks_enabled(check):
        bad = household_invariants(p, raw.x, d)
        if bad:
            raise InvariantError("household solution breaks invariants: " + "; ".join(bad))
    cfg = scenario.config
    bill = bill_from_dispatch(d, assets, retail, f, cfg.period_weight, cfg.v2h_degradation_cost or 0.0)
    return ProsumerLpSolution(
        dispatch=d,
        bill=bill,
        objective=raw.objective,
        self_generation_rate=realized_self_generation_rate(d, cfg.setup),
        retail=retail,
    )


def household_invariants(p: LpProblem, x: np.ndarray, d: ProsumerDispatch, rtol: float = 1e-6) -> list[str]:
    """Row feasibility, hourly balance from flows, and battery state bounds."""
    scale = max(1.0, float(np.max(d.load)))
    bad = []
    if p.max_violation(x) > rtol * scale:
        bad.append(f"row or bound violation {p.max_violation(x):.3g}")
    res = d.rooftop_to_load + d.battery_out_to_load + d.v2h_discharge + d.grid_imports - d.load
    if np.max(np.abs(res)) > rtol * scale:
        bad.append(f"hourly balance residual {np.max(np.abs(res)):.3g}")
    if np.max(d.battery_soc - d.battery_energy) > rtol * scale or np.min(d.battery_soc) < -rtol * scale:
        bad.append("home battery state outside [0, capacity]")
    return bad


def bill_gap(cp_bill: BillBreakdown, pro: ProsumerLpSolution) -> float:
    """Relative excess of the planner-implied bill over the household optimum."""
    if pro.bill.total <= 0:
        raise BillError("household bill is not positive; relative gap undefined")
    return (cp_bill.total - pro.bill.total) / pro.bill.total
