import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from gapforge.instance import IpInstance, LawFamily, ColumnLaw, Model, generate
from gapforge.oracles import lp_vertex_value
from gapforge.simplex import (Infeasible, check_solution_props, dual_value, dual_value_arrays, gap_formula,
                              solution_from_arrays, solve_lp)


def _dsu(A_num, b_num, c, k=1):
    A_num = np.asarray(A_num, dtype=np.int64)
    m, n = A_num.shape
    return IpInstance(Model.DSU, m, n, k, A_num, np.asarray(b_num, dtype=np.int64), np.asarray(c, dtype=float),
                      None, 0, ColumnLaw(LawFamily.DSU_SYMMETRIC, k=k))


def test_two_variable_lp():
    sol = solution_from_arrays(np.array([[1.0, 1.0]]), np.array([1.0]), np.array([2.0, 1.0]))
    assert sol.value == pytest.approx(2.0, abs=1e-12)
    assert sol.x_star.tolist() == [1.0, 0.0]
    # every u in [1, 2] is dual optimal here
    assert 1.0 - 1e-9 <= sol.u_star[0] <= 2.0 + 1e-9
    assert dual_value_arrays(sol.u_star, np.array([[1.0, 1.0]]), np.array([1.0]), np.array([2.0, 1.0])) \
        == pytest.approx(2.0, abs=1e-12)


def test_nonpositive_objective_gives_zero():
    rng = np.random.default_rng(0)
    A = rng.uniform(-1, 1, (3, 12))
    sol = solution_from_arrays(A, np.ones(3), -rng.random(12))
    assert sol.value == 0.0
    assert np.all(sol.x_star == 0)
    assert np.all(sol.u_star == 0)


def test_frozen_six_variable_lp():
    A = np.array([[1., -2, 3, 0.5, -1, 2], [2, 1, -1, 1, 3, -0.5]])
    b = np.array([2., 1.5])
    c = np.array([3., 1, 2, -1, 2.5, 1])
    sol = solution_from_arrays(A, b, c)
    assert sol.value == pytest.approx(49 / 9, abs=1e-9)
    assert len(sol.frac_idx) <= 2


def test_infeasible_box_raises():
    with pytest.raises(Infeasible):
        solution_from_arrays(np.array([[1.0, 1.0]]), np.array([-1.0]), np.array([1.0, 1.0]))


def test_dual_value_special_cases():
    inst = generate("dsu", 15, 2, 3, seed=4)
    assert dual_value(np.zeros(2), inst) == pytest.approx(np.maximum(inst.c, 0).sum())
    zero_c = IpInstance(inst.model, inst.m, inst.n, inst.k, inst.A_num, inst.b_num, np.zeros(inst.n), None, 0,
                        inst.law)
    expect = inst.b[0] + np.maximum(-inst.A[0], 0).sum()
    assert dual_value(np.array([1.0, 0.0]), zero_c) == pytest.approx(expect)
    with pytest.raises(ValueError):
        dual_value(np.array([-1.0, 0.0]), inst)


def test_gap_formula_at_optimum_and_origin():
    inst = generate("dsu", 60, 2, 3, seed=8)
    sol = solve_lp(inst)
    bd = gap_formula(sol.x_star, sol.u_star, inst)
    assert abs(bd.total) <= 1e-8
    bd0 = gap_formula(np.zeros(inst.n), np.zeros(inst.m), inst)
    assert bd0.total == pytest.approx(np.maximum(inst.c, 0).sum())


def test_weak_duality_on_random_pairs():
    rng = np.random.default_rng(1)
    inst = generate("dsu", 20, 2, 3, b_spec=[2.0, 1.0], seed=3)
    checked = 0
    for _ in range(1000):
        x = (rng.random(inst.n) < 0.2).astype(float)
        if np.any(inst.A @ x > inst.b + 1e-12):
            continue
        u = rng.exponential(size=2)
        assert dual_value(u, inst) >= inst.c @ x - 1e-12
        checked += 1
    assert checked > 100


@given(seed=st.integers(0, 10**6), m=st.integers(1, 3), n=st.integers(1, 12))
def test_gap_formula_identity(seed, m, n):
    rng = np.random.default_rng(seed)
    inst = _dsu(rng.integers(-3, 4, (m, n)), rng.integers(-2, 5, m), rng.standard_normal(n), k=3)
    x = rng.random(n)
    u = rng.exponential(size=m) * (rng.random(m) < 0.7)
    bd = gap_formula(x, u, inst)
    assert bd.total == pytest.approx(dual_value(u, inst) - inst.c @ x, abs=1e-9)
    assert bd.reduced_cost_term >= 0


def _random_lp(rng, m, n):
    A = rng.uniform(-1, 1, (m, n))
    x0 = rng.random(n)
    b = A @ x0 + rng.uniform(0, 1, m)
    c = rng.uniform(-5, 5, n)
    return A, b, c


@given(seed=st.integers(0, 10**6), m=st.integers(1, 5), n=st.integers(1, 60))
def test_duality_and_slackness(seed, m, n):
    rng = np.random.default_rng(seed)
    A, b, c = _random_lp(rng, m, n)
    sol = solution_from_arrays(A, b, c)
    assert abs(dual_value_arrays(sol.u_star, A, b, c) - sol.value) <= 1e-8
    slack = b - A @ sol.x_star
    assert np.all(slack >= -1e-9)
    assert np.all(np.abs(slack[sol.u_star > 0]) <= 1e-8)
    rc = sol.reduced_costs
    assert np.all(rc[sol.N1] <= 1e-8)
    assert np.all(rc[sol.N0] >= -1e-8)
    assert np.all(np.abs(rc[sol.frac_idx]) <= 1e-8)
    assert len(sol.frac_idx) <= m


@given(seed=st.integers(0, 10**6), m=st.integers(1, 2), n=st.integers(1, 8))
def test_matches_vertex_enumeration(seed, m, n):
    rng = np.random.default_rng(seed)
    A, b, c = _random_lp(rng, m, n)
    assert solution_from_arrays(A, b, c).value == pytest.approx(lp_vertex_value(A, b, c), abs=1e-9)


def test_matches_highs_on_larger_lps():
    rng = np.random.default_rng(5)
    for _ in range(30):
        m, n = int(rng.integers(1, 6)), int(rng.integers(50, 300))
        A, b, c = _random_lp(rng, m, n)
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, 1), method="highs")
        assert solution_from_arrays(A, b, c).value == pytest.approx(-ref.fun, abs=1e-8)


def test_solution_props_reports():
    inst = generate("dsu", 2000, 2, 3, seed=0)
    rep = check_solution_props(solve_lp(inst), inst)
    assert rep.u_ok and rep.n0_ok
    neg = IpInstance(inst.model, inst.m, inst.n, inst.k, inst.A_num, inst.b_num, -np.abs(inst.c), None, 0, inst.law)
    assert check_solution_props(solve_lp(neg), neg).n0_frac == 1.0
    pk = generate("packing", 2000, 2, 3, beta=0.1, seed=0)
    prep = check_solution_props(solve_lp(pk), pk)
    assert prep.u_threshold == pytest.approx(60.0)
    assert prep.u_ok
