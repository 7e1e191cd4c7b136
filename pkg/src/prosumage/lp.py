"""Standard-form linear programs with named columns and rows.

Models are assembled with :class:`LpBuilder` and frozen into an immutable
:class:`LpProblem`. Columns and rows are registered in named groups so that
model code can address e.g. all hourly generation columns of a technology
at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

INF = float("inf")

SENSES = ("L", "E", "G")  # <=, =, >=


class LpError(Exception):
    """Malformed LP (duplicate names, dangling references, bad bounds)."""


class SolverError(Exception):
    """A solve did not end in an optimal solution."""

    def __init__(self, message: str, status: "Status | None" = None, diagnostics: str = ""):
        super().__init__(message)
        self.status = status
        self.diagnostics = diagnostics


class InfeasibleError(SolverError):
    pass


class UnboundedError(SolverError):
    pass


class IterationLimitError(SolverError):
    pass


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    LIMIT = "limit"
    ERROR = "error"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LpProblem:
    """Minimisation LP ``min c'x + c0 s.t. rows(A x ? rhs), lb <= x <= ub``.

    Instances are immutable; all arrays are read-only.
    """

    var_names: tuple[str, ...]
    lb: np.ndarray
    ub: np.ndarray
    c: np.ndarray
    A: sp.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    row_names: tuple[str, ...]
    obj_constant: float = 0.0
    name: str = "lp"
    var_groups: Mapping[str, np.ndarray] = field(default_factory=dict)
    row_groups: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n, m = len(self.var_names), len(self.row_names)
        if self.A.shape != (m, n):
            raise LpError(f"matrix shape {self.A.shape} does not match {m} rows x {n} columns")
        if len(set(self.var_names)) != n:
            raise LpError("duplicate variable names")
        if len(set(self.row_names)) != m:
            raise LpError("duplicate row names")
        if any(s not in SENSES for s in self.senses) or len(self.senses) != m:
            raise LpError("row senses must be one of L/E/G, one per row")
        if np.any(self.lb > self.ub):
            bad = int(np.argmax(self.lb > self.ub))
            raise LpError(f"lower bound exceeds upper bound for {self.var_names[bad]!r}")
        for attr in ("lb", "ub", "c", "rhs"):
            object.__setattr__(self, attr, _frozen(np.asarray(getattr(self, attr), dtype=float)))
        A = sp.csr_matrix(self.A, dtype=float)
        A.sum_duplicates()
        A.data.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(
            self, "var_groups", MappingProxyType({k: _frozen(v) for k, v in self.var_groups.items()})
        )
        object.__setattr__(
            self, "row_groups", MappingProxyType({k: _frozen(v) for k, v in self.row_groups.items()})
        )

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    def col(self, name: str) -> int:
        try:
            return self._col_index[name]
        except AttributeError:
            object.__setattr__(self, "_col_index", {v: i for i, v in enumerate(self.var_names)})
            return self._col_index[name]

    def row(self, name: str) -> int:
        try:
            return self._row_index[name]
        except AttributeError:
            object.__setattr__(self, "_row_index", {r: i for i, r in enumerate(self.row_names)})
            return self._row_index[name]

    def activity(self, x: np.ndarray) -> np.ndarray:
        """Row activities ``A x``."""
        return self.A @ np.asarray(x, dtype=float)

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ np.asarray(x, dtype=float) + self.obj_constant)

    def max_violation(self, x: np.ndarray) -> float:
        """Largest absolute bound or row violation of ``x``."""
        x = np.asarray(x, dtype=float)
        act = self.activity(x)
        viol = [0.0]
        if self.n_vars:
            viol.append(float(np.max(np.maximum(self.lb - x, 0.0))))
            viol.append(float(np.max(np.maximum(x - self.ub, 0.0))))
        senses = np.array(self.senses)
        if self.n_rows:
            diff = act - self.rhs
            viol.append(float(np.max(np.where(senses == "L", np.maximum(diff, 0.0), 0.0))))
            viol.append(float(np.max(np.where(senses == "G", np.maximum(-diff, 0.0), 0.0))))
            viol.append(float(np.max(np.where(senses == "E", np.abs(diff), 0.0))))
        return max(viol)


@dataclass
class LpSolution:
    """Primal/dual result of a solve.

    ``duals[i]`` is the marginal change of the optimal objective per unit
    increase of ``rhs[i]``. ``reduced_costs`` equal ``c - A'duals``.
    """

    status: Status
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    backend: str = ""
    message: str = ""
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def raise_for_status(self) -> None:
        if self.status is Status.OPTIMAL:
            return
        cls = {
            Status.INFEASIBLE: InfeasibleError,
            Status.UNBOUNDED: UnboundedError,
            Status.LIMIT: IterationLimitError,
        }.get(self.status, SolverError)
        raise cls(f"{self.backend or 'solver'}: {self.status.value}", self.status, self.message)


def dual_objective(p: LpProblem, sol: LpSolution) -> float:
    """Dual objective ``b'y + sum_j d_j * bound_j`` for a bounded-variable LP.

    Each reduced cost is paired with the bound it prices: positive with the
    lower bound, negative with the upper bound.
    """
    d = sol.reduced_costs
    bound = np.where(d > 0, p.lb, p.ub)
    with np.errstate(invalid="ignore"):
        bound_terms = np.where((d == 0) | ~np.isfinite(bound), 0.0, d * bound)
    return float(p.rhs @ sol.duals + np.sum(bound_terms) + p.obj_constant)


class LpBuilder:
    """Incremental LP assembly.

    Columns and rows are created in vectorised blocks; coefficients are
    accumulated as COO triplets and summed on :meth:`build`.
    """

    def __init__(self, name: str = "lp") -> None:
        self.name = name
        self._names: list[str] = []
        self._lb: list[np.ndarray] = []
        self._ub: list[np.ndarray] = []
        self._c: list[np.ndarray] = []
        self._row_names: list[str] = []
        self._senses: list[str] = []
        self._rhs: list[np.ndarray] = []
        self._ri: list[np.ndarray] = []
        self._ci: list[np.ndarray] = []
        self._v: list[np.ndarray] = []
        self.var_groups: dict[str, np.ndarray] = {}
        self.row_groups: dict[str, np.ndarray] = {}
        self.obj_constant = 0.0
        self._extra_cost: list[tuple[np.ndarray, np.ndarray]] = []

    @property
    def n_vars(self) -> int:
        return len(self._names)

    @property
    def n_rows(self) -> int:
        return len(self._row_names)

    def add_vars(self, group: str, n: int | None = None, lb=0.0, ub=INF, cost=0.0) -> np.ndarray:
        """Register ``n`` columns named ``group[k]`` (or one column ``group``).

        Returns the column indices as an array (length 1 for scalars).
        """
        if group in self.var_groups:
            raise LpError(f"duplicate variable group {group!r}")
        if n is None:
            names = [group]
            size = 1
        else:
            names = [f"{group}[{k}]" for k in range(n)]
            size = n
        idx = np.arange(self.n_vars, self.n_vars + size)
        self._names.extend(names)
        self._lb.append(np.broadcast_to(np.asarray(lb, dtype=float), (size,)).copy())
        self._ub.append(np.broadcast_to(np.asarray(ub, dtype=float), (size,)).copy())
        self._c.append(np.broadcast_to(np.asarray(cost, dtype=float), (size,)).copy())
        self.var_groups[group] = idx
        return idx

    def add_rows(self, group: str, n: int | None, sense: str, rhs=0.0) -> np.ndarray:
        if sense not in SENSES:
            raise LpError(f"unknown sense {sense!r}")
        if group in self.row_groups:
            raise LpError(f"duplicate row group {group!r}")
        if n is None:
            names = [group]
            size = 1
        else:
            names = [f"{group}[{k}]" for k in range(n)]
            size = n
        idx = np.arange(self.n_rows, self.n_rows + size)
        self._row_names.extend(names)
        self._senses.extend([sense] * size)
        self._rhs.append(np.broadcast_to(np.asarray(rhs, dtype=float), (size,)).copy())
        self.row_groups[group] = idx
        return idx

    def add_terms(self, rows, cols, coefs=1.0) -> None:
        """Add ``coefs`` at positions ``(rows, cols)`` with numpy broadcasting."""
        r, c, v = np.broadcast_arrays(
            np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64), np.asarray(coefs, dtype=float)
        )
        self._ri.append(r.ravel().copy())
        self._ci.append(c.ravel().copy())
        self._v.append(v.ravel().copy())

    def add_cost(self, cols, cost) -> None:
        """Add ``cost`` to objective coefficients of existing columns."""
        cols, cost = np.broadcast_arrays(np.asarray(cols, dtype=np.int64), np.asarray(cost, dtype=float))
        self._extra_cost.append((cols.ravel().copy(), cost.ravel().copy()))

    def build(self) -> LpProblem:
        n, m = self.n_vars, self.n_rows
        cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0)  # noqa: E731
        c = cat(self._c)
        for cols, cost in self._extra_cost:
            np.add.at(c, cols, cost)
        ri = cat(self._ri).astype(np.int64)
        ci = cat(self._ci).astype(np.int64)
        if ri.size and (ri.max() >= m or ci.max() >= n or ri.min() < 0 or ci.min() < 0):
            raise LpError("coefficient references a missing row or column")
        A = sp.coo_matrix((cat(self._v), (ri, ci)), shape=(m, n)).tocsr()
        A.sum_duplicates()
        A.eliminate_zeros()
        return LpProblem(
            var_names=tuple(self._names),
            lb=cat(self._lb),
            ub=cat(self._ub),
            c=c,
            A=A,
            senses=tuple(self._senses),
            rhs=cat(self._rhs),
            row_names=tuple(self._row_names),
            obj_constant=self.obj_constant,
            name=self.name,
            var_groups=dict(self.var_groups),
            row_groups=dict(self.row_groups),
        )


def make_lp(
    c: Sequence[float],
    A: Sequence[Sequence[float]] | np.ndarray,
    senses: Sequence[str],
    rhs: Sequence[float],
    lb: Sequence[float] | float = 0.0,
    ub: Sequence[float] | float = INF,
    name: str = "lp",
) -> LpProblem:
    """Small dense helper, mostly for tests: columns ``x0..``, rows ``r0..``."""
    c = np.asarray(c, dtype=float)
    n = c.size
    A = np.asarray(A, dtype=float).reshape(len(senses), n)
    return LpProblem(
        var_names=tuple(f"x{j}" for j in range(n)),
        lb=np.broadcast_to(np.asarray(lb, dtype=float), (n,)).copy(),
        ub=np.broadcast_to(np.asarray(ub, dtype=float), (n,)).copy(),
        c=c,
        A=sp.csr_matrix(A),
        senses=tuple(senses),
        rhs=np.asarray(rhs, dtype=float),
        row_names=tuple(f"r{i}" for i in range(len(senses))),
        name=name,
    )
