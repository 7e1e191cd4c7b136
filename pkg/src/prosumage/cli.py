"""Command line interface.

Exit codes: 0 success, 2 configuration or input error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .backends import BACKEND_ENV, BACKENDS, DEFAULT_BACKEND
from .bev import BevError
from .bill import bill_gap, compute_bill_cp, solve_prosumer_lp
from .checks import compare, duration_curves, outcome_of_cp, outcome_of_pro, rtp100_flag, write_duration_csv
from .inputs import scenario_from_values
from .lp import LpError, SolverError
from .model import InvariantError, ModelError, build_central_planner, realized_self_generation_rate, solve_central_planner
from .mps import MpsError, to_mps
from .results import CURVE_COLUMNS, RunRecord, atomic_write, curve_rows, write_rows
from .scenario import ConfigError, SeriesError, SeriesSchema, config_hash, load_config, load_timeseries, write_timeseries
from .search import SweepError, parse_grid, sweep
from .tariffs import TariffError, build_tariff, write_tariff_csv
from .techs import SpecError

log = logging.getLogger("prosumage")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
SWEEP_RECORD = "sweep.json"
PRICES_STAR = "prices_at_omega_star.csv"


# prices may be negative, so no lower bound
_ANY = SeriesSchema("price", "EUR/MWh", None, None)


class InputMissing(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="scenario config file (key = value)")
    p.add_argument("--backend", choices=sorted(BACKENDS), default=None, help="LP solver backend")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--seed", type=int, default=None, help="seed for synthetic inputs")
    p.add_argument("--grid", default=None, help="omega grid 'a:b:step'")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def make_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="prosumage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    b = sub.add_parser("build", parents=[common], help="write the planner LP as fixed-format MPS")
    b.add_argument("--omega", type=float, default=None)
    s = sub.add_parser("solve", parents=[common], help="single planner run (reference when omega is unset)")
    s.add_argument("--omega", type=float, default=None)
    sw = sub.add_parser("sweep", parents=[common], help="grid search over omega")
    sw.add_argument("--no-refine", action="store_true", help="skip the fine pass around the coarse minimum")
    pr = sub.add_parser("prosumer", parents=[common], help="household bill minimisation at given prices")
    pr.add_argument("--prices", type=Path, default=None, help="wholesale price CSV; default: sweep output")
    sub.add_parser("check", parents=[common], help="compare planner and household outcomes at omega*")
    t = sub.add_parser("tariff", parents=[common], help="write the retail price series")
    t.add_argument("--prices", type=Path, default=None, help="wholesale price CSV; default: reference solve")
    return parser


def _load(args):
    if args.config is None:
        raise ConfigError("--config is required")
    values = load_config(args.config)
    if args.seed is not None:
        values["seed"] = args.seed
    scenario = scenario_from_values(values)
    public = {k: v for k, v in values.items() if not k.startswith("_")}
    return scenario, config_hash(public)


def _with_omega(scenario, omega):
    if omega is None:
        return scenario
    return scenario.with_config(scenario.config.with_omega(omega))


def _backend_name(args) -> str:
    return args.backend or os.environ.get(BACKEND_ENV, DEFAULT_BACKEND)


def cmd_build(args) -> int:
    scenario, _ = _load(args)
    scenario = _with_omega(scenario, args.omega)
    c = scenario.config
    p, _ = build_central_planner(c, scenario.techs, scenario.storages, scenario.bevs, scenario.demand)
    path = args.out / f"{c.scenario_id}.mps"
    atomic_write(path, to_mps(p))
    print(f"wrote {path} ({p.n_vars} columns, {p.n_rows} rows)")
    return EXIT_OK


def cmd_solve(args) -> int:
    scenario, h = _load(args)
    scenario = _with_omega(scenario, args.omega)
    cp, p, idx, raw = solve_central_planner(scenario, args.backend)
    c = scenario.config
    out = {
        "scenario_id": c.scenario_id,
        "config_hash": h,
        "omega": c.omega,
        "objective_eur": cp.objective,
        "capacities_mw": cp.capacities,
        "storage": cp.storage_capacities,
        "hydrogen": cp.hydrogen,
        "mean_price_eur_per_mwh": float(cp.wholesale_prices.mean()),
    }
    if cp.prosumer is not None:
        retail = build_tariff(c.tariff, cp.wholesale_prices)
        bill = compute_bill_cp(cp, retail, c.feed_in_tariff, scenario)
        out["prosumer"] = {
            "rooftop_kw_per_household": cp.prosumer.rooftop_kw_per_household,
            "battery_kwh_per_household": cp.prosumer.battery_kwh_per_household,
            "realized_rate": realized_self_generation_rate(cp.prosumer, c.setup),
            "bill": bill.as_dict(),
        }
    atomic_write(args.out / "solve.json", json.dumps(out, indent=2, sort_keys=True))
    write_timeseries(args.out / "wholesale_prices.csv", cp.wholesale_prices)
    print(f"objective {cp.objective:.2f} EUR, mean price {out['mean_price_eur_per_mwh']:.2f} EUR/MWh")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario, h = _load(args)
    grid = parse_grid(args.grid) if args.grid else None
    curve = sweep(scenario, grid, refine=not args.no_refine, backend=args.backend, threads=args.threads)
    c = scenario.config
    rows = curve_rows(c.scenario_id, curve)
    write_rows(args.out / "omega_curve.csv", rows, CURVE_COLUMNS)
    star = curve.star
    write_timeseries(args.out / PRICES_STAR, star.solution.wholesale_prices)
    rec = RunRecord(
        scenario_id=c.scenario_id,
        config_hash=h,
        backend=_backend_name(args),
        omega_star=curve.omega_star,
        points=rows,
        extra={"z_monotone": curve.z_monotone, "tie_policy": curve.tie_policy, "tariff": c.tariff.label},
    )
    rec.finish().save(args.out / SWEEP_RECORD)
    print(f"omega* = {curve.omega_star:.2f}, bill per household {star.bill.per_household:.2f} EUR")
    return EXIT_OK


def _sweep_record(args, h: str) -> RunRecord:
    path = args.out / SWEEP_RECORD
    if not path.exists():
        raise InputMissing(f"no sweep results in {args.out}; run 'sweep' first")
    rec = RunRecord.load(path)
    if rec.config_hash != h:
        raise InputMissing(f"{path} was produced with a different config; rerun 'sweep'")
    return rec


def _prices(args, scenario, h):
    if args.prices is not None:
        if not args.prices.exists():
            raise InputMissing(f"price file not found: {args.prices}")
        return load_timeseries(args.prices, scenario.config.horizon, _ANY), None
    rec = _sweep_record(args, h)
    return load_timeseries(args.out / PRICES_STAR, scenario.config.horizon, _ANY), rec.omega_star


def cmd_prosumer(args) -> int:
    scenario, h = _load(args)
    prices, omega = _prices(args, scenario, h)
    c = scenario.config
    pro = solve_prosumer_lp(prices, c.tariff, c.feed_in_tariff, scenario, args.backend)
    out = {
        "omega_star": omega,
        "bill": pro.bill.as_dict(),
        "rooftop_kw_per_household": pro.rooftop_kw_per_household,
        "battery_kwh_per_household": pro.battery_kwh_per_household,
        "realized_rate": pro.self_generation_rate,
    }
    atomic_write(args.out / "prosumer.json", json.dumps(out, indent=2, sort_keys=True))
    print(f"household bill {pro.bill.per_household:.2f} EUR, self-generation rate {pro.self_generation_rate:.3f}")
    return EXIT_OK


def cmd_check(args) -> int:
    scenario, h = _load(args)
    rec = _sweep_record(args, h)
    s = _with_omega(scenario, rec.omega_star)
    c = s.config
    cp, *_ = solve_central_planner(s, args.backend)
    retail = build_tariff(c.tariff, cp.wholesale_prices)
    bill = compute_bill_cp(cp, retail, c.feed_in_tariff, s)
    rate = realized_self_generation_rate(cp.prosumer, c.setup)
    pro = solve_prosumer_lp(cp.wholesale_prices, c.tariff, c.feed_in_tariff, s, args.backend)
    rep = compare(outcome_of_cp(cp, bill, rate), outcome_of_pro(pro), c.tariff.label, rec.omega_star,
                  bill_gap=bill_gap(bill, pro))
    report = rep.as_dict()
    report["exceeds"] = rep.exceeds()
    report["rtp100_flag"] = rtp100_flag(rep)
    atomic_write(args.out / "deviation.json", json.dumps(report, indent=2, sort_keys=True, default=str))
    for mode in ("independent_sort", "cosorted"):
        pair = duration_curves(cp.prosumer.rooftop_to_load, pro.dispatch.rooftop_to_load, mode)
        write_duration_csv(args.out / f"duration_rooftop_to_load_{mode}.csv", pair)
    print(f"d_omega {rep.d_omega:+.2f} pp, bill gap {report['meta_bill_gap']:+.4%}")
    return EXIT_OK


def cmd_tariff(args) -> int:
    scenario, h = _load(args)
    if args.prices is not None:
        prices, _ = _prices(args, scenario, h)
    else:
        cp, *_ = solve_central_planner(scenario, args.backend)
        prices = cp.wholesale_prices
    r = build_tariff(scenario.config.tariff, np.asarray(prices))
    path = args.out / "tariff.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    write_tariff_csv(path, r)
    print(f"wrote {path} ({scenario.config.tariff.label}, mean retail {r.retail.mean():.2f} EUR/MWh)")
    return EXIT_OK


COMMANDS = {
    "build": cmd_build,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "prosumer": cmd_prosumer,
    "check": cmd_check,
    "tariff": cmd_tariff,
}

CONFIG_ERRORS = (
    ConfigError, SeriesError, SpecError, TariffError, BevError, ModelError, MpsError, LpError, InputMissing,
    OSError, ValueError,
)


def run_cli(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SolverError, SweepError, InvariantError) as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
