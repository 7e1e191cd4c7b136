import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_bounded_lp, vertex_enumeration
from prosumage.backends import SolveOptions, get_backend, solve
from prosumage.lp import (
    InfeasibleError,
    LpBuilder,
    LpError,
    LpProblem,
    SolverError,
    Status,
    UnboundedError,
    dual_objective,
    make_lp,
)
from prosumage.mps import MpsError, mps_names, parse_mps, to_mps
from prosumage.simplex import DimensionError, simplex_oracle

BACKENDS = ["highs", "oracle"]


def _lp(data):
    c, A, senses, rhs, lb, ub = data
    return make_lp(c, A, senses, rhs, lb, ub)


# ------------------------------------------------------------------ builder


def test_builder_groups_and_terms():
    b = LpBuilder("t")
    x = b.add_vars("x", 3, lb=0, ub=[1, 2, 3], cost=[1, 2, 3])
    y = b.add_vars("y", None, cost=5)
    r = b.add_rows("cap", 3, "L", 4.0)
    b.add_terms(r, x, 1.0)
    b.add_terms(r, np.repeat(y, 3), -1.0)
    p = b.build()
    assert p.n_vars == 4 and p.n_rows == 3
    assert p.var_names[:2] == ("x[0]", "x[1]")
    assert list(p.var_groups["x"]) == [0, 1, 2]
    assert p.A.toarray()[1].tolist() == [0, 1, 0, -1]
    assert p.c.tolist() == [1, 2, 3, 5]


def test_problem_is_read_only():
    p = make_lp([1.0], [[1.0]], ["G"], [1.0])
    with pytest.raises(ValueError):
        p.c[0] = 2.0


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        (dict(var_names=("a", "a")), "duplicate variable"),
        (dict(senses=("X",)), "senses"),
        (dict(lb=np.array([2.0, 0.0])), "lower bound"),
    ],
)
def test_problem_validation(kwargs, msg):
    base = dict(
        var_names=("a", "b"), lb=np.zeros(2), ub=np.ones(2), c=np.zeros(2),
        A=sp.csr_matrix(np.ones((1, 2))), senses=("L",), rhs=np.ones(1), row_names=("r",),
    )
    base.update(kwargs)
    with pytest.raises(LpError, match=msg):
        LpProblem(**base)


def test_builder_rejects_unknown_column():
    b = LpBuilder()
    b.add_vars("x", 1)
    r = b.add_rows("r", 1, "L", 1.0)
    b.add_terms(r, [5], 1.0)
    with pytest.raises(LpError, match="missing"):
        b.build()


# ----------------------------------------------------------- small examples


@pytest.mark.parametrize("backend", BACKENDS)
def test_textbook_box(backend):
    p = make_lp([-1, -1], [[1, 1]], ["L"], [1], lb=0, ub=1)
    sol = solve(p, backend)
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("backend", BACKENDS)
def test_single_equality_dual_equals_cost(backend):
    p = make_lp([3.5], [[1.0]], ["E"], [2.0], lb=-np.inf)
    sol = solve(p, backend)
    assert sol.duals[0] == pytest.approx(3.5, abs=1e-9)
    assert sol.x[0] == pytest.approx(2.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_dual_is_marginal_cost_of_rhs(backend):
    # min 2x + 3y, x + y >= 4, x <= 3: marginal unit comes from y
    p = make_lp([2, 3], [[1, 1], [1, 0]], ["G", "L"], [4, 3])
    sol = solve(p, backend)
    assert sol.duals[0] == pytest.approx(3.0)
    assert sol.duals[1] == pytest.approx(-1.0)
    bumped = solve(make_lp([2, 3], [[1, 1], [1, 0]], ["G", "L"], [4.5, 3]), backend)
    assert bumped.objective - sol.objective == pytest.approx(0.5 * sol.duals[0])


@pytest.mark.parametrize("backend", BACKENDS)
def test_infeasible_and_unbounded(backend):
    inf = solve(make_lp([1.0], [[1.0]], ["G"], [2.0], ub=1.0), backend)
    assert inf.status is Status.INFEASIBLE
    with pytest.raises(InfeasibleError):
        inf.raise_for_status()
    unb = solve(make_lp([-1.0, 0.0], [[1.0, -1.0]], ["L"], [1.0]), backend)
    assert unb.status is Status.UNBOUNDED
    with pytest.raises(UnboundedError):
        unb.raise_for_status()


@pytest.mark.parametrize("backend", BACKENDS)
def test_empty_problem(backend):
    p = LpBuilder("empty").build()
    sol = solve(p, backend)
    assert sol.status is Status.OPTIMAL and sol.objective == 0.0


def test_unknown_backend():
    with pytest.raises(SolverError, match="unknown backend"):
        get_backend("cplex")


def test_backend_fetch_before_solve():
    b = get_backend("highs")
    with pytest.raises(SolverError):
        b.fetch()


def test_oracle_dimension_limit():
    p = make_lp(np.ones(6), np.ones((1, 6)), ["G"], [1.0])
    with pytest.raises(DimensionError):
        simplex_oracle(p, max_vars=5)


def test_time_limit_option_accepted():
    p = make_lp([1.0], [[1.0]], ["G"], [1.0])
    assert solve(p, "highs", SolveOptions(tolerance=1e-8, time_limit=10)).optimal


def test_free_and_negative_bounds():
    # x free, y in [-2, -1]: min x - y with x >= y + 0.5
    p = make_lp([1, -1], [[1, -1]], ["G"], [0.5], lb=[-np.inf, -2], ub=[np.inf, -1])
    for be in BACKENDS:
        sol = solve(p, be)
        assert sol.objective == pytest.approx(0.5)


# -------------------------------------------------------- oracle agreement


@pytest.mark.parametrize("seed", range(40))
def test_vertex_enumeration_agrees(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 4))
    data = random_bounded_lp(rng, n, m)
    ref, _ = vertex_enumeration(*data)
    assert ref is not None
    p = _lp(data)
    for be in BACKENDS:
        sol = solve(p, be)
        assert sol.optimal
        assert sol.objective == pytest.approx(ref, rel=1e-7, abs=1e-7)


def test_degenerate_cycling_example():
    # Beale's example cycles under the textbook largest-coefficient rule
    c = [-0.75, 150, -0.02, 6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    p = make_lp(c, A, ["L", "L", "L"], [0, 0, 1])
    sol = simplex_oracle(p)
    assert sol.optimal
    assert sol.objective == pytest.approx(-0.05)


def _check_kkt(p, sol, tol=1e-8):
    act = p.activity(sol.x)
    slack = act - p.rhs
    for i, s in enumerate(p.senses):
        if s != "E":
            assert abs(slack[i] * sol.duals[i]) <= tol * max(1.0, abs(p.rhs[i]))
        if s == "L":
            assert sol.duals[i] <= tol
        if s == "G":
            assert sol.duals[i] >= -tol
    primal = sol.objective
    assert abs(primal - dual_objective(p, sol)) <= 1e-6 * (1 + abs(primal))


@pytest.mark.parametrize("seed", range(20))
def test_oracle_kkt(seed):
    rng = np.random.default_rng(100 + seed)
    p = _lp(random_bounded_lp(rng, int(rng.integers(2, 9)), int(rng.integers(1, 7))))
    _check_kkt(p, simplex_oracle(p))


@pytest.mark.parametrize("seed", range(20))
def test_highs_strong_duality(seed):
    rng = np.random.default_rng(200 + seed)
    p = _lp(random_bounded_lp(rng, int(rng.integers(2, 11)), int(rng.integers(1, 8))))
    sol = solve(p, "highs")
    assert abs(sol.objective - dual_objective(p, sol)) <= 1e-6 * (1 + abs(sol.objective))


# --------------------------------------------------------------------- MPS


def test_mps_minimal_structure():
    p = make_lp([1.0], [[1.0]], ["G"], [1.0])
    text = to_mps(p)
    lines = text.splitlines()
    rows = lines[lines.index("ROWS") + 1 : lines.index("COLUMNS")]
    assert [ln.split()[0] for ln in rows] == ["N", "G"]
    rhs = lines[lines.index("RHS") + 1 :]
    assert any(ln.split()[-1] == "1" for ln in rhs if ln.startswith(" "))
    assert text.rstrip().endswith("ENDATA")


def test_mps_empty_problem():
    p = LpBuilder("empty").build()
    q = parse_mps(to_mps(p))
    assert q.n_vars == 0 and q.n_rows == 0


def test_mps_fixed_columns():
    text = to_mps(make_lp([1.0, -2.5], [[1.0, 3.0]], ["L"], [4.0]))
    for ln in text.splitlines():
        if ln.startswith("    x"):
            # name field starts at column 5, row name at 15, value ends at 36
            assert ln[4:12].strip().startswith("x")
            assert ln[14:22].strip() != ""


def test_mps_long_names_mangled():
    b = LpBuilder()
    b.add_vars("a_very_long_group", 2, cost=1.0)
    r = b.add_rows("short", 1, "G", 1.0)
    b.add_terms(r, [0, 1], 1.0)
    p = b.build()
    cols, rows = mps_names(p)
    assert cols == ["C0000000", "C0000001"]
    assert rows == ["short[0]"]
    q = parse_mps(to_mps(p))
    assert q.A.toarray().tolist() == p.A.toarray().tolist()


def test_mps_name_clash():
    b = LpBuilder()
    b.add_vars("C0000001", None)
    b.add_vars("another_long_name", 2)
    with pytest.raises(MpsError, match="clash"):
        to_mps(b.build())


def test_mps_reserved_objective_name():
    p = LpProblem(("x",), np.zeros(1), np.ones(1), np.ones(1), sp.csr_matrix([[1.0]]), ("L",), np.ones(1), ("COST",))
    with pytest.raises(MpsError, match="reserved"):
        to_mps(p)


def test_mps_parse_errors():
    with pytest.raises(MpsError, match="unknown row"):
        parse_mps("NAME t\nROWS\n N COST\nCOLUMNS\n    x  R1  1\nENDATA\n")
    with pytest.raises(MpsError, match="integer markers"):
        parse_mps("NAME t\nROWS\n N COST\nCOLUMNS\n    M  'MARKER'  'INTORG'\nENDATA\n")


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def lps(draw):
    n = draw(st.integers(1, 6))
    m = draw(st.integers(0, 5))
    c = draw(st.lists(finite, min_size=n, max_size=n))
    A = draw(st.lists(st.lists(finite, min_size=n, max_size=n), min_size=m, max_size=m))
    senses = draw(st.lists(st.sampled_from("LEG"), min_size=m, max_size=m))
    rhs = draw(st.lists(finite, min_size=m, max_size=m))
    lb = draw(st.lists(st.one_of(finite, st.just(-np.inf)), min_size=n, max_size=n))
    width = draw(st.lists(st.one_of(st.floats(0, 1e3), st.just(np.inf)), min_size=n, max_size=n))
    ub = [lo + w if np.isfinite(lo) else (w if np.isfinite(w) else np.inf) for lo, w in zip(lb, width)]
    ub = [max(u, lo) for u, lo in zip(ub, lb)]
    return make_lp(c, np.array(A).reshape(m, n), senses, rhs, lb, ub)


@settings(max_examples=150, deadline=None)
@given(lps())
def test_mps_round_trip_exact(p):
    q = parse_mps(to_mps(p))
    assert q.senses == p.senses
    assert np.array_equal(q.c, p.c)
    assert np.array_equal(q.rhs, p.rhs)
    assert np.array_equal(q.lb, p.lb) and np.array_equal(q.ub, p.ub)
    assert (q.A != p.A).nnz == 0
