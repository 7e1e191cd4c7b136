"""Grid search over the self-generation rate."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bill import BillBreakdown, compute_bill_cp
from .lp import SolverError
from .model import CpSolution, realized_self_generation_rate, solve_central_planner
from .scenario import Scenario
from .tariffs import build_tariff

log = logging.getLogger(__name__)

TIE_POLICY = "smallest omega among equal bills"


class SweepError(RuntimeError):
    pass


def default_grid(step: float = 0.05) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.round(np.linspace(0.0, 1.0, n + 1), 10)


def parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` inclusive of both ends."""
    try:
        a, b, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like 'a:b:step', got {text!r}") from None
    if step <= 0 or a > b:
        raise ValueError("grid needs a <= b and a positive step")
    if a < 0 or b > 1:
        raise ValueError("grid must lie within [0, 1]")
    n = int(round((b - a) / step))
    return np.round(a + step * np.arange(n + 1), 10)


@dataclass
class OmegaPoint:
    omega: float
    status: str
    objective: float = float("nan")
    bill: BillBreakdown | None = None
    realized_rate: float = float("nan")
    mean_price: float = float("nan")
    solution: CpSolution | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "optimal" and self.bill is not None

    @property
    def total(self) -> float:
        return self.bill.total if self.bill is not None else float("nan")


@dataclass
class OmegaCurve:
    points: list[OmegaPoint]
    omega_star: float
    tie_policy: str = TIE_POLICY
    z_monotone: bool = True

    @property
    def star(self) -> OmegaPoint:
        return next(p for p in self.points if p.omega == self.omega_star)

    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    def bills(self) -> np.ndarray:
        return np.array([p.total for p in self.points])

    def objectives(self) -> np.ndarray:
        return np.array([p.objective for p in self.points])


def evaluate_point(scenario: Scenario, omega: float, backend=None) -> OmegaPoint:
    """Planner solve at one omega, then the bill under the scenario tariff."""
    cfg = scenario.config
    s = scenario.with_config(cfg.with_omega(float(omega)))
    try:
        cp, *_ = solve_central_planner(s, backend)
    except SolverError as exc:
        return OmegaPoint(omega=float(omega), status=exc.status.value if exc.status else "error")
    retail = build_tariff(cfg.tariff, cp.wholesale_prices)
    bill = compute_bill_cp(cp, retail, cfg.feed_in_tariff, s)
    return OmegaPoint(
        omega=float(omega),
        status="optimal",
        objective=cp.objective,
        bill=bill,
        realized_rate=realized_self_generation_rate(cp.prosumer, cfg.setup),
        mean_price=float(cp.wholesale_prices.mean()),
        solution=cp,
    )


def _evaluate_many(scenario: Scenario, omegas, backend, threads: int) -> list[OmegaPoint]:
    if threads <= 1 or len(omegas) <= 1:
        return [evaluate_point(scenario, w, backend) for w in omegas]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(evaluate_point, scenario, w, backend) for w in omegas]
        return [f.result() for f in futures]


def argmin_omega(points: list[OmegaPoint]) -> float:
    ok = [p for p in points if p.ok]
    if not ok:
        raise SweepError("no grid point produced an optimal solution")
    best = min(p.total for p in ok)
    return min(p.omega for p in ok if p.total == best)


def z_monotone(points: list[OmegaPoint], rtol: float = 1e-6) -> bool:
    """Planner cost must not fall as omega rises."""
    ok = sorted((p for p in points if p.status == "optimal"), key=lambda p: p.omega)
    z = np.array([p.objective for p in ok])
    if z.size < 2:
        return True
    return bool(np.all(np.diff(z) >= -rtol * np.maximum(1.0, np.abs(z[:-1]))))


def sweep(
    scenario: Scenario,
    grid=None,
    refine: bool = True,
    refine_step: float = 0.01,
    backend=None,
    threads: int = 1,
) -> OmegaCurve:
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise SweepError("empty omega grid")
    if np.any(grid < 0) or np.any(grid > 1) or np.any(np.diff(grid) <= 0):
        raise SweepError("grid must be strictly increasing within [0, 1]")
    points = _evaluate_many(scenario, list(grid), backend, threads)
    star = argmin_omega(points)
    if refine and grid.size > 1:
        k = int(np.searchsorted(grid, star))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        n = int(round((hi - lo) / refine_step))
        fine = np.round(lo + refine_step * np.arange(n + 1), 10)
        seen = {round(p.omega, 10) for p in points}
        extra = [w for w in fine if round(w, 10) not in seen]
        points += _evaluate_many(scenario, extra, backend, threads)
        points.sort(key=lambda p: p.omega)
        star = argmin_omega(points)
    mono = z_monotone(points)
    if not mono:
        log.warning("planner objective decreases along the omega grid")
    return OmegaCurve(points=points, omega_star=star, z_monotone=mono)


def convexity_excess(omegas, bills) -> float:
    """Largest rise of an interior point above the chord of its neighbours,
    as a share of the bill range (0 for a convex curve)."""
    w = np.asarray(omegas, dtype=float)
    v = np.asarray(bills, dtype=float)
    if v.size < 3:
        return 0.0
    span = float(v.max() - v.min())
    if span == 0:
        return 0.0
    t = (w[1:-1] - w[:-2]) / (w[2:] - w[:-2])
    chord = v[:-2] + t * (v[2:] - v[:-2])
    return float(max(0.0, np.max(v[1:-1] - chord)) / span)


@dataclass
class AdderReport:
    omega_star: dict[float, float]
    monotone: bool
    violations: list[tuple[float, float]]


def adder_monotonicity(curves: dict[float, OmegaCurve]) -> AdderReport:
    """omega* should not fall as the tariff adder rises."""
    adders = sorted(curves)
    stars = {a: curves[a].omega_star for a in adders}
    bad = [(a, b) for a, b in zip(adders, adders[1:]) if stars[b] < stars[a]]
    return AdderReport(omega_star=stars, monotone=not bad, violations=bad)
