"""Acceptance criteria 1-10 on the bundled toy system.

Each test records its verdict through the ``record`` fixture before
asserting, so the terminal summary lists every criterion once.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import random_bounded_lp, tariff_exact
from prosumage.backends import solve
from prosumage.bill import bill_gap, compute_bill_cp, solve_prosumer_lp
from prosumage.checks import compare, outcome_of_cp, outcome_of_pro
from prosumage.lp import Status, dual_objective, make_lp
from prosumage.model import (
    InvariantError,
    check_invariants,
    extract_solution,
    invariant_checks_enabled,
    realized_self_generation_rate,
    solve_central_planner,
)
from prosumage.mps import parse_mps, to_mps
from prosumage.scenario import Setup
from prosumage.search import adder_monotonicity, convexity_excess
from prosumage.simplex import simplex_oracle
from prosumage.tariffs import ALL_SCHEMES, AdderVariant, TariffScheme, build_tariff
from prosumage.toy import toy_config, toy_scenario

pytestmark = pytest.mark.slow

ADDERS = (100.0, 150.0, 200.0, 250.0)
VARIANT_NO = {AdderVariant.INVARIANT: 1, AdderVariant.HALF_DYNAMIC: 2, AdderVariant.FULL_DYNAMIC: 3}
SIMULTANEOUS_TOL = 1e-6  # MWh in both directions within one hour


def _both_ways(imports, exports) -> int:
    return int(np.sum(np.minimum(imports, exports) > SIMULTANEOUS_TOL))


# ---------------------------------------------------------------- 1


def test_c01_zero_omega_degeneracy(record):
    worst, slowest = 0.0, 0.0
    for setup, H in ((Setup.NO_BEVS, 336), (Setup.WITH_BEVS, 168)):
        sc = toy_scenario(toy_config(setup=setup, horizon=H, omega=0.0), seed=1)
        t = time.perf_counter()
        cp, *_ = solve_central_planner(sc)
        slowest = max(slowest, time.perf_counter() - t)
        worst = max(worst, cp.prosumer.rooftop_cap, cp.prosumer.battery_energy)
    ref, *_ = solve_central_planner(toy_scenario(toy_config(), seed=1))
    ok = worst <= 1e-6 and slowest < 10.0 and ref.prosumer is None and "Rooftop photovoltaic" not in ref.capacities
    record(1, ok, f"max rooftop/battery {worst:.2e}, slowest solve {slowest:.1f}s")
    assert ok


# ---------------------------------------------------------------- 2


def test_c02_bill_convexity(record, sweeps):
    sc, curve, secs = sweeps.get(adder=200.0, refine=False)
    ok_pts = [p for p in curve.points if p.ok]
    excess = convexity_excess([p.omega for p in ok_pts], [p.total for p in ok_pts])
    ok = len(curve.points) == 21 and excess <= 1e-3 and secs < 300
    record(2, ok, f"{len(ok_pts)}/21 optimal, excess {excess:.2e} of bill range, {secs:.0f}s")
    assert ok


# ---------------------------------------------------------------- 3


def test_c03_adder_monotonicity(record, sweeps):
    t = time.perf_counter()
    curves = {a: sweeps.get(adder=a)[1] for a in ADDERS}
    secs = time.perf_counter() - t
    rep = adder_monotonicity(curves)
    stars = ", ".join(f"{a:g}:{w:.2f}" for a, w in rep.omega_star.items())
    ok = rep.monotone and secs < 1200
    record(3, ok, f"omega* by adder {stars}, {secs:.0f}s")
    assert ok


# ---------------------------------------------------------------- 4 and 5


@pytest.fixture(scope="module")
def scheme_results(sweeps):
    """Planner at each scheme's omega* and the household LP at its prices."""
    out = {}
    t = time.perf_counter()
    for kind, variant in ALL_SCHEMES:
        sc, curve, _ = sweeps.get(kind=kind.value, variant=variant.value, adder=200.0)
        star = curve.star
        cp = star.solution
        s = sc.with_config(sc.config.with_omega(curve.omega_star))
        c = s.config
        retail = build_tariff(c.tariff, cp.wholesale_prices)
        cp_bill = compute_bill_cp(cp, retail, c.feed_in_tariff, s)
        pro = solve_prosumer_lp(cp.wholesale_prices, c.tariff, c.feed_in_tariff, s)
        rate = realized_self_generation_rate(cp.prosumer, c.setup)
        out[c.tariff.label] = {
            "omega_star": curve.omega_star,
            "gap": bill_gap(cp_bill, pro),
            "report": compare(outcome_of_cp(cp, cp_bill, rate), outcome_of_pro(pro), c.tariff.label),
            "cp_both": _both_ways(cp.prosumer.grid_imports, cp.prosumer.rooftop_to_grid),
            "pro_both": _both_ways(pro.dispatch.grid_imports, pro.dispatch.rooftop_to_grid),
            "price_floor": float(cp.wholesale_prices.min()),
            "price_spread": float(np.ptp(cp.wholesale_prices)),
            "feed_in": c.feed_in_tariff,
        }
    out["_seconds"] = time.perf_counter() - t
    return out


def test_c04_dominance(record, scheme_results):
    gaps = {k: v["gap"] for k, v in scheme_results.items() if not k.startswith("_")}
    secs = scheme_results["_seconds"]
    ok = len(gaps) == 7 and min(gaps.values()) >= -1e-6 and secs < 600
    record(4, ok, f"gap range [{min(gaps.values()):.4f}, {max(gaps.values()):.4f}] over 7 schemes, {secs:.0f}s")
    assert ok


def test_c05_rtp100_pathology(record, scheme_results):
    res = {k: v for k, v in scheme_results.items() if not k.startswith("_")}
    rtp = res["RTP 100"]
    others = max(abs(v["report"].d_omega) for k, v in res.items() if k != "RTP 100")
    d = abs(rtp["report"].d_omega)
    ok = (
        rtp["feed_in"] > rtp["price_floor"]
        and rtp["pro_both"] > 0
        and rtp["cp_both"] == 0
        and d > others
    )
    record(
        5, ok,
        f"household both-ways hours {rtp['pro_both']}, planner {rtp['cp_both']}; "
        f"|d_omega| {d:.2f} pp vs next {others:.2f} pp; price floor {rtp['price_floor']:.1f} < f {rtp['feed_in']:g}",
    )
    assert ok


# ---------------------------------------------------------------- 6


def test_c06_battery_substitution(record, sweeps):
    sc, curve, secs = sweeps.get(setup=Setup.WITH_BEVS, adder=200.0)
    ref, *_ = solve_central_planner(sc)
    assert ref.prosumer is None
    cp = curve.star.solution
    utility_ref = ref.utility_battery_energy
    utility = cp.utility_battery_energy
    home = cp.prosumer.battery_energy
    ok = home + utility >= utility_ref - 1e-6 and utility < utility_ref and secs < 900
    record(
        6, ok,
        f"omega* {curve.omega_star:.2f}: utility {utility_ref:.3f} -> {utility:.3f} MWh, home {home:.3f} MWh, {secs:.0f}s",
    )
    assert ok


# ---------------------------------------------------------------- 7


def _kkt_errors(p, sol, tol=1e-6):
    """Largest sign, duality and complementarity violations."""
    scale = 1.0 + abs(sol.objective)
    y, d, x = sol.duals, sol.reduced_costs, sol.x
    slack = p.activity(x) - p.rhs
    senses = np.array(p.senses)
    sign = max(
        float(np.max(np.where(senses == "L", y, 0.0), initial=0.0)),
        float(np.max(np.where(senses == "G", -y, 0.0), initial=0.0)),
    )
    cs_rows = float(np.max(np.abs(y * np.where(senses == "E", 0.0, slack)), initial=0.0))
    at_lb = np.where(np.isfinite(p.lb), x - p.lb, np.inf)
    at_ub = np.where(np.isfinite(p.ub), p.ub - x, np.inf)
    cs_cols = float(np.max(np.where(d > tol, d * at_lb, np.where(d < -tol, -d * at_ub, 0.0)), initial=0.0))
    rc = float(np.max(np.abs(d - (p.c - p.A.T @ y)), initial=0.0))
    gap = abs(sol.objective - dual_objective(p, sol))
    return max(sign, rc), gap / scale, max(cs_rows, cs_cols) / scale


def test_c07_lp_layer(record):
    rng = np.random.default_rng(2024)
    bad = []
    for i in range(200):
        n = int(rng.integers(1, 11))
        m = int(rng.integers(1, 9))
        c, A, senses, rhs, lb, ub = random_bounded_lp(rng, n, m)
        p = make_lp(c, A, senses, rhs, lb, ub, name=f"r{i}")
        hs, ox = solve(p, "highs"), simplex_oracle(p)
        if hs.status is not Status.OPTIMAL or ox.status is not Status.OPTIMAL:
            bad.append((i, "status", hs.status.value, ox.status.value))
            continue
        if abs(hs.objective - ox.objective) > 1e-6 * max(1.0, abs(ox.objective)):
            bad.append((i, "objective", hs.objective, ox.objective))
        for name, sol in (("highs", hs), ("oracle", ox)):
            sign, gap, cs = _kkt_errors(p, sol)
            if sign > 1e-6 or gap > 1e-6 or cs > 1e-6:
                bad.append((i, name, sign, gap, cs))
        q = parse_mps(to_mps(p))
        exact = (
            np.array_equal(q.c, p.c) and np.array_equal(q.rhs, p.rhs) and q.senses == p.senses
            and np.array_equal(q.lb, p.lb) and np.array_equal(q.ub, p.ub) and (q.A != p.A).nnz == 0
        )
        if not exact:
            bad.append((i, "mps"))
    ok = not bad
    record(7, ok, f"200 random LPs, {len(bad)} failures" + (f": {bad[:3]}" if bad else ""))
    assert ok, bad[:5]


# ---------------------------------------------------------------- 8


def test_c08_tariff_arithmetic(record):
    rng = np.random.default_rng(8)
    worst = 0.0
    cases = [np.round(rng.uniform(-30, 200, size=96), 2) for _ in range(5)] + [np.array([20.0, 80.0, 50.0, 50.0] * 6)]
    for P in cases:
        for kind, variant in ALL_SCHEMES:
            for A in (0.0, 100.0, 200.0):
                got = build_tariff(TariffScheme(kind, variant, A), P)
                want, _ = tariff_exact(kind.value, VARIANT_NO[variant], P, A)
                want = np.array([float(w) for w in want])
                err = np.abs(got.retail - want) / np.maximum(np.abs(want), 1e-300)
                worst = max(worst, float(np.max(np.where(want == 0, np.abs(got.retail), err))))
    hand = [
        build_tariff(TariffScheme("Fixed", adder=200), np.array([20.0, 80.0, 50.0, 50.0])).retail[0] == 250.0,
        build_tariff(TariffScheme("RTP", "FullDynamicAdder", 200), np.array([100.0, 0.0, 50.0, 50.0])).retail[0] == 500.0,
        build_tariff(TariffScheme("RTP", "HalfDynamicAdder", 200), np.array([0.0, 100.0, 50.0, 50.0])).retail[0] == 100.0,
    ]
    ok = worst <= 1e-12 and all(hand)
    record(8, ok, f"7 schemes x 3 adders x {len(cases)} price series, worst relative error {worst:.1e}")
    assert ok


# ---------------------------------------------------------------- 9


def test_c09_structural_invariants(record):
    # every solve in the suite runs these checks through the environment switch;
    # here they are also exercised directly, including a deliberate corruption
    assert invariant_checks_enabled()
    n_checked, failures = 0, []
    for setup, H in ((Setup.NO_BEVS, 168), (Setup.WITH_BEVS, 48)):
        for omega in (None, 0.0, 0.5, 0.9):
            sc = toy_scenario(toy_config(setup=setup, horizon=H, omega=omega), seed=1)
            cp, p, idx, raw = solve_central_planner(sc, check=False)
            rep = check_invariants(p, raw, idx, cp)
            n_checked += 1
            if not rep.ok():
                failures.append((setup.value, omega, rep.messages))
            if cp.prosumer is None:
                continue
            for kind, variant in ALL_SCHEMES:
                t = TariffScheme(kind, variant, 200.0)
                n_checked += 1
                try:
                    solve_prosumer_lp(cp.wholesale_prices, t, 20.0, sc, check=True)
                except InvariantError as exc:
                    failures.append((setup.value, omega, t.label, str(exc)))
    # the checks must notice a broken solution
    sc = toy_scenario(toy_config(horizon=48, omega=0.5), seed=3)
    cp, p, idx, raw = solve_central_planner(sc, check=False)
    broken = replace(raw, x=raw.x.copy())
    broken.x[idx.prosumer.imports[0]] += 1.0
    caught = not check_invariants(p, broken, idx, extract_solution(broken, idx, sc)).ok()
    ok = not failures and caught
    record(9, ok, f"{n_checked} solves checked explicitly, corruption detected: {caught}")
    assert ok, failures


# ---------------------------------------------------------------- 10


def _eta_09_scenario():
    sc = toy_scenario(toy_config(setup=Setup.WITH_BEVS, horizon=48, omega=0.5), seed=1)
    storages = tuple(
        s if s.grid_coupled else replace(s, eta_charge=0.9, eta_discharge=0.9) for s in sc.storages
    )
    fleet = replace(sc.bevs, eta_charge=0.9, eta_discharge=0.9)
    return replace(sc, storages=storages, bevs=fleet)


def _lhs_by_hand(x, pidx, eta=0.9):
    """Self-generated energy net of conversion losses, written out flow by flow."""
    r2l, r2b, b2l = x[pidx.r2l], x[pidx.r2b], x[pidx.b2l]
    r2ev = x[pidx.r2ev].sum(axis=0)
    b2ev = x[pidx.b2ev].sum(axis=0)
    v2h_self = x[pidx.v2h].sum(axis=0)
    charge_loss = r2b - eta * r2b  # home battery charging
    discharge_loss = (b2l + b2ev) / eta - (b2l + b2ev)  # home battery output is net of this
    ev_in_loss = (r2ev + b2ev) - eta * (r2ev + b2ev)  # self-generated energy entering the vehicle
    v2h_loss = v2h_self / eta - v2h_self  # leaving the vehicle again
    L = charge_loss + discharge_loss + ev_in_loss + v2h_loss
    return float(np.sum(r2l + b2l + r2ev + b2ev - L)), L


def test_c10_loss_accounting(record):
    sc = _eta_09_scenario()
    cp, p, idx, raw = solve_central_planner(sc)
    pidx, row = idx.prosumer, idx.self_generation_row
    lhs, L = _lhs_by_hand(raw.x, pidx)
    activity = float(p.activity(raw.x)[row])
    err_solution = abs(lhs - activity)

    rng = np.random.default_rng(10)
    err_random = 0.0
    for _ in range(20):
        x = rng.uniform(0.0, 5.0, size=p.n_vars)
        err_random = max(err_random, abs(_lhs_by_hand(x, pidx)[0] - float(p.activity(x)[row])))

    rhs = 0.5 * float(sc.demand.prosumer_profile.sum() * sc.config.prosumer_count + sc.bevs.driving_total().sum())
    ok = err_solution <= 1e-8 and err_random <= 1e-8 and abs(p.rhs[row] - rhs) <= 1e-8 * max(1.0, rhs) and L.sum() > 0
    record(
        10, ok,
        f"|LHS - row activity| {err_solution:.1e} at the optimum, {err_random:.1e} on random points; losses {L.sum():.3f} MWh",
    )
    assert ok
