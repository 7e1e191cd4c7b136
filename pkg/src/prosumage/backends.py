"""Solver adapters.

An adapter follows a three-step contract: ``load(problem)``, ``solve(options)``
and ``fetch()``. :func:`solve` wraps the sequence. Dual values returned by every
adapter follow one convention: the marginal objective change per unit
increase of the row right-hand side, for a minimisation.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .lp import LpProblem, LpSolution, SolverError, Status

log = logging.getLogger(__name__)

BACKEND_ENV = "PROSUMAGE_BACKEND"
DEFAULT_BACKEND = "highs"


@dataclass(frozen=True)
class SolveOptions:
    tolerance: float = 1e-7
    time_limit: float | None = None


class Backend:
    name = "abstract"

    def __init__(self) -> None:
        self._problem: LpProblem | None = None
        self._result: LpSolution | None = None

    def load(self, problem: LpProblem) -> None:
        self._problem = problem
        self._result = None

    def solve(self, options: SolveOptions | None = None) -> None:
        raise NotImplementedError

    def fetch(self) -> LpSolution:
        if self._result is None:
            raise SolverError(f"{self.name}: fetch() before solve()")
        return self._result


def _trivial_solution(p: LpProblem, backend: str) -> LpSolution:
    """Solution of a problem without columns: every row is ``0 ? rhs``."""
    ok = all(
        (s == "L" and 0.0 <= b) or (s == "G" and 0.0 >= b) or (s == "E" and b == 0.0)
        for s, b in zip(p.senses, p.rhs)
    )
    return LpSolution(
        status=Status.OPTIMAL if ok else Status.INFEASIBLE,
        x=np.zeros(0),
        duals=np.zeros(p.n_rows),
        reduced_costs=np.zeros(0),
        objective=p.obj_constant if ok else float("nan"),
        backend=backend,
    )


class HighsBackend(Backend):
    """HiGHS dual simplex through :func:`scipy.optimize.linprog`."""

    name = "highs"

    def solve(self, options: SolveOptions | None = None) -> None:
        p = self._problem
        if p is None:
            raise SolverError("highs: solve() before load()")
        options = options or SolveOptions()
        if p.n_vars == 0:
            self._result = _trivial_solution(p, self.name)
            return

        senses = np.array(p.senses)
        is_l, is_g, is_e = senses == "L", senses == "G", senses == "E"
        ineq = np.flatnonzero(is_l | is_g)
        eq = np.flatnonzero(is_e)
        sign = np.where(is_g, -1.0, 1.0)
        A_ub = sp.diags(sign[ineq]) @ p.A[ineq] if ineq.size else None
        b_ub = sign[ineq] * p.rhs[ineq] if ineq.size else None
        A_eq = p.A[eq] if eq.size else None
        b_eq = p.rhs[eq] if eq.size else None
        bounds = np.column_stack([p.lb, p.ub])

        opts = {
            "primal_feasibility_tolerance": options.tolerance,
            "dual_feasibility_tolerance": options.tolerance,
        }
        if options.time_limit is not None:
            opts["time_limit"] = float(options.time_limit)
        try:
            res = linprog(
                p.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs-ds", options=opts
            )
        except ValueError as exc:
            raise SolverError(f"highs: rejected problem {p.name!r}", Status.ERROR, str(exc)) from exc

        status = {0: Status.OPTIMAL, 1: Status.LIMIT, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(
            res.status, Status.ERROR
        )
        if status is not Status.OPTIMAL:
            self._result = LpSolution(
                status=status,
                x=np.full(p.n_vars, np.nan),
                duals=np.full(p.n_rows, np.nan),
                reduced_costs=np.full(p.n_vars, np.nan),
                objective=float("nan"),
                backend=self.name,
                message=str(res.message),
                iterations=int(getattr(res, "nit", 0) or 0),
            )
            return

        duals = np.zeros(p.n_rows)
        if ineq.size:
            duals[ineq] = sign[ineq] * res.ineqlin.marginals
        if eq.size:
            duals[eq] = res.eqlin.marginals
        reduced = np.asarray(res.lower.marginals) + np.asarray(res.upper.marginals)
        self._result = LpSolution(
            status=status,
            x=np.asarray(res.x, dtype=float) + 0.0,
            duals=duals,
            reduced_costs=reduced,
            objective=float(res.fun) + p.obj_constant,
            backend=self.name,
            message=str(res.message),
            iterations=int(getattr(res, "nit", 0) or 0),
        )


class OracleBackend(Backend):
    """The built-in dense simplex; only for tiny problems."""

    name = "oracle"

    def __init__(self, max_vars: int = 500) -> None:
        super().__init__()
        self.max_vars = max_vars

    def solve(self, options: SolveOptions | None = None) -> None:
        from .simplex import simplex_oracle

        if self._problem is None:
            raise SolverError("oracle: solve() before load()")
        self._result = simplex_oracle(self._problem, max_vars=self.max_vars)


BACKENDS: dict[str, type[Backend]] = {"highs": HighsBackend, "oracle": OracleBackend}


def get_backend(name: str | None = None) -> Backend:
    name = name or os.environ.get(BACKEND_ENV, DEFAULT_BACKEND)
    try:
        return BACKENDS[name]()
    except KeyError:
        raise SolverError(f"unknown backend {name!r}; available: {sorted(BACKENDS)}") from None


def solve(p: LpProblem, backend: str | Backend | None = None, options: SolveOptions | None = None) -> LpSolution:
    """Load, solve and fetch in one call. Non-optimal statuses are returned, not raised."""
    adapter = backend if isinstance(backend, Backend) else get_backend(backend)
    adapter.load(p)
    adapter.solve(options)
    sol = adapter.fetch()
    log.debug("%s solved %s: %s obj=%s", adapter.name, p.name, sol.status.value, sol.objective)
    return sol
