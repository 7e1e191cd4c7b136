"""Reference computations that share no code with the package.

Everything here works from first principles: exact rational arithmetic for
annuities and tariffs, brute-force vertex enumeration for small LPs.
"""

from __future__ import annotations

import itertools
from decimal import Decimal, getcontext
from fractions import Fraction

import numpy as np


def annuity_exact(overnight, rate, lifetime) -> Fraction:
    """r(1+r)^L / ((1+r)^L - 1) times the overnight cost, as a Fraction."""
    P, r, L = Fraction(str(overnight)), Fraction(str(rate)), int(lifetime)
    if r == 0:
        return P / L
    g = (1 + r) ** L
    return P * r * g / (g - 1)


def annuity_decimal(overnight, rate, lifetime, digits: int = 50) -> Decimal:
    """Same quantity through repeated Decimal multiplication."""
    getcontext().prec = digits
    r = Decimal(str(rate))
    g = Decimal(1)
    for _ in range(int(lifetime)):
        g *= 1 + r
    return Decimal(str(overnight)) * r * g / (g - 1)


def tariff_exact(kind: str, variant: str, prices, adder, peak_hours=range(8, 20)):
    """Retail series in Fractions for kind in Fixed/ToU/RTP and variant in 1/2/3."""
    P = [Fraction(str(p)) for p in prices]
    A = Fraction(str(adder))
    mean = sum(P) / len(P)
    if variant == 1:
        ta = [A] * len(P)
    elif variant == 2:
        ta = [A / 2 + p / mean * A / 2 for p in P]
    else:
        ta = [p / mean * A for p in P]
    if kind == "Fixed":
        proc = [mean] * len(P)
    elif kind == "RTP":
        proc = list(P)
    else:
        peak = [h % 24 in set(peak_hours) for h in range(len(P))]
        on = [p for p, k in zip(P, peak) if k]
        off = [p for p, k in zip(P, peak) if not k]
        m_on = sum(on) / len(on) if on else Fraction(0)
        m_off = sum(off) / len(off) if off else Fraction(0)
        proc = [m_on if k else m_off for k in peak]
    return [p + t for p, t in zip(proc, ta)], ta


def vertex_enumeration(c, A, senses, rhs, lb, ub, tol=1e-9):
    """Minimum of c'x over a bounded polytope by trying every basis.

    Returns (objective, x) or (None, None) when no vertex is feasible.
    Only practical for a handful of variables.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float).reshape(len(senses), c.size)
    n = c.size
    # all constraints as a_i x (<=, =, >=) b_i; bounds appended as rows
    rows, b, kinds = [], [], []
    for i, s in enumerate(senses):
        rows.append(A[i]), b.append(rhs[i]), kinds.append(s)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        rows.append(e), b.append(lb[j]), kinds.append("G")
        if np.isfinite(ub[j]):
            rows.append(e), b.append(ub[j]), kinds.append("L")
    rows, b = np.array(rows), np.array(b, float)
    # keep an independent subset of equalities; the rest is checked below
    eq = []
    for i, k in enumerate(kinds):
        if k == "E" and np.linalg.matrix_rank(rows[eq + [i]]) > len(eq):
            eq.append(i)
    others = [i for i, k in enumerate(kinds) if k != "E"]
    best, arg = None, None
    need = n - len(eq)
    if need < 0:
        choose = itertools.combinations(eq, n)
    else:
        choose = (tuple(eq) + extra for extra in itertools.combinations(others, need))
    for active in choose:
        M = rows[list(active)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, b[list(active)])
        act = rows @ x
        ok = True
        for v, bi, k in zip(act, b, kinds):
            scale = tol * max(1.0, abs(bi))
            if (k == "L" and v > bi + scale) or (k == "G" and v < bi - scale) or (k == "E" and abs(v - bi) > scale):
                ok = False
                break
        if ok:
            val = float(c @ x)
            if best is None or val < best - 1e-12:
                best, arg = val, x
    return best, arg


def random_bounded_lp(rng: np.random.Generator, n: int, m: int, eq_share: float = 0.2):
    """Feasible, bounded LP data: a point x0 inside the box satisfies every row."""
    lb = rng.integers(-3, 2, size=n).astype(float)
    ub = lb + rng.integers(1, 6, size=n).astype(float)
    x0 = lb + rng.uniform(0, 1, size=n) * (ub - lb)
    A = np.round(rng.normal(0, 2, size=(m, n)), 3)
    A[rng.uniform(size=(m, n)) < 0.3] = 0.0
    senses = []
    rhs = []
    for i in range(m):
        v = float(A[i] @ x0)
        u = rng.uniform()
        if u < eq_share:
            senses.append("E")
            rhs.append(v)
        elif u < 0.6:
            senses.append("L")
            rhs.append(v + float(rng.uniform(0, 2)))
        else:
            senses.append("G")
            rhs.append(v - float(rng.uniform(0, 2)))
    c = np.round(rng.normal(0, 3, size=n), 3)
    return c, A, senses, np.array(rhs), lb, ub
