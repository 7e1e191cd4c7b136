"""Dense two-phase tableau simplex with Bland's rule.

This is a reference implementation used to cross-check the production
backend on small problems. It favours clarity over speed.
"""

from __future__ import annotations

import numpy as np

from .lp import LpError, LpProblem, LpSolution, Status

PIVOT_TOL = 1e-9
OPT_TOL = 1e-9


class DimensionError(LpError):
    pass


def _standard_form(p: LpProblem):
    """Rewrite ``p`` as ``min cs'z s.t. As z = bs, z >= 0, bs >= 0``.

    Returns the standard-form data plus what is needed to map back: for each
    original column a list of ``(std_col, coef)`` with ``x_j = shift_j +
    sum coef * z``, and the sign applied to each original row.
    """
    A = p.A.toarray()
    m, n = A.shape
    cols: list[np.ndarray] = []
    cost: list[float] = []
    back: list[list[tuple[int, float]]] = []
    shift = np.zeros(n)
    ub_rows: list[tuple[int, float]] = []  # (std col, bound) for z <= bound

    for j in range(n):
        lo, hi = p.lb[j], p.ub[j]
        if np.isfinite(lo):
            shift[j] = lo
            k = len(cols)
            cols.append(A[:, j])
            cost.append(p.c[j])
            back.append([(k, 1.0)])
            if np.isfinite(hi):
                ub_rows.append((k, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            k = len(cols)
            cols.append(-A[:, j])
            cost.append(-p.c[j])
            back.append([(k, -1.0)])
        else:
            k = len(cols)
            cols.append(A[:, j])
            cols.append(-A[:, j])
            cost.extend([p.c[j], -p.c[j]])
            back.append([(k, 1.0), (k + 1, -1.0)])

    n_struct = len(cols)
    rhs = p.rhs - A @ shift
    senses = list(p.senses)
    # bound rows z_k <= u are appended as extra "L" rows
    n_rows = m + len(ub_rows)
    M = np.zeros((n_rows, n_struct))
    if n_struct:
        M[:m] = np.column_stack(cols)
    b = np.concatenate([rhs, [u for _, u in ub_rows]])
    for r, (k, _) in enumerate(ub_rows):
        M[m + r, k] = 1.0
        senses.append("L")

    slack_cols = []
    for i, s in enumerate(senses):
        if s == "E":
            continue
        col = np.zeros(n_rows)
        col[i] = 1.0 if s == "L" else -1.0
        slack_cols.append(col)
    if slack_cols:
        M = np.hstack([M, np.column_stack(slack_cols)])
    cs = np.concatenate([np.asarray(cost, dtype=float), np.zeros(len(slack_cols))])

    row_sign = np.where(b < 0, -1.0, 1.0)
    M = M * row_sign[:, None]
    b = b * row_sign
    return M, b, cs, back, shift, row_sign, m


def _pivot(T: np.ndarray, r: int, k: int) -> None:
    T[r] /= T[r, k]
    for i in range(T.shape[0]):
        if i != r and T[i, k] != 0.0:
            T[i] -= T[i, k] * T[r]


def _run(T: np.ndarray, basis: list[int], allowed: int, max_iter: int) -> tuple[str, int]:
    """Iterate on tableau ``T`` (objective in the last row) with Bland's rule."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        d = T[m, :allowed]
        entering = np.flatnonzero(d < -OPT_TOL)
        if entering.size == 0:
            return "optimal", it
        k = int(entering[0])
        col = T[:m, k]
        cand = np.flatnonzero(col > PIVOT_TOL)
        if cand.size == 0:
            return "unbounded", it
        ratios = T[cand, -1] / col[cand]
        best = ratios.min()
        ties = cand[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, k)
        basis[r] = k
    return "limit", max_iter


def simplex_oracle(p: LpProblem, max_vars: int = 500, max_iter: int = 50_000) -> LpSolution:
    """Solve ``p`` exactly enough for testing, returning primal and duals.

    Raises :class:`DimensionError` when ``p`` has more than ``max_vars`` columns.
    Exhausting ``max_iter`` pivots yields status ``limit``.
    """
    if p.n_vars > max_vars:
        raise DimensionError(f"oracle limited to {max_vars} variables, got {p.n_vars}")

    M, b, cs, back, shift, row_sign, m_orig = _standard_form(p)
    m, N = M.shape

    def fail(status: Status, it: int) -> LpSolution:
        return LpSolution(
            status=status,
            x=np.full(p.n_vars, np.nan),
            duals=np.full(p.n_rows, np.nan),
            reduced_costs=np.full(p.n_vars, np.nan),
            objective=float("nan"),
            backend="oracle",
            iterations=it,
        )

    # phase 1: one artificial per row
    T = np.zeros((m + 1, N + m + 1))
    T[:m, :N] = M
    T[:m, N : N + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :N] = -M.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = list(range(N, N + m))
    status, it1 = _run(T, basis, N, max_iter)
    if status == "limit":
        return fail(Status.LIMIT, it1)
    if -T[m, -1] > 1e-7 * max(1.0, np.abs(b).max(initial=0.0)):
        return fail(Status.INFEASIBLE, it1)

    keep = list(range(m))
    for r in range(m):
        if basis[r] < N:
            continue
        nz = np.flatnonzero(np.abs(T[r, :N]) > PIVOT_TOL)
        if nz.size:
            k = int(nz[0])
            _pivot(T, r, k)
            basis[r] = k
        else:
            keep.remove(r)  # redundant row

    T = np.vstack([T[keep][:, list(range(N)) + [N + m]], np.zeros((1, N + 1))])
    basis = [basis[r] for r in keep]
    mk = len(keep)
    cB = cs[basis]
    T[mk, :N] = cs - cB @ T[:mk, :N]
    T[mk, -1] = -cB @ T[:mk, -1]
    status, it2 = _run(T, basis, N, max_iter - it1)
    it = it1 + it2
    if status == "limit":
        return fail(Status.LIMIT, it)
    if status == "unbounded":
        return fail(Status.UNBOUNDED, it)

    # recompute primal and duals from the original basis columns
    z = np.zeros(N)
    y_std = np.zeros(m)
    if mk:
        B = M[np.ix_(keep, basis)]
        z[basis] = np.linalg.solve(B, b[keep])
        y_std[keep] = np.linalg.solve(B.T, cs[basis])
    z = np.maximum(z, 0.0)

    x = shift.copy()
    for j, parts in enumerate(back):
        for k, coef in parts:
            x[j] += coef * z[k]
    duals = (row_sign * y_std)[:m_orig]
    reduced = p.c - p.A.T @ duals
    return LpSolution(
        status=Status.OPTIMAL,
        x=x,
        duals=duals,
        reduced_costs=np.asarray(reduced, dtype=float),
        objective=p.objective(x),
        backend="oracle",
        iterations=it,
    )
