import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from conicdist import lp_core
from conicdist.lp_core import LinearProgram, LpConfigError, Status, feasible, solve


def test_minimize_with_lower_bound():
    out = solve(LinearProgram([1.0], bounds=[(1.0, None)]))
    assert out.status is Status.OPTIMAL
    assert out.x[0] == pytest.approx(1.0)
    assert out.value == pytest.approx(1.0)


def test_infeasible():
    out = solve(LinearProgram([0.0], A_ub=[[1.0]], b_ub=[-1.0]))
    assert out.status is Status.INFEASIBLE


def test_unbounded():
    out = solve(LinearProgram([-1.0]))
    assert out.status is Status.UNBOUNDED


def test_feasible_examples():
    ok, x = feasible(bounds=[(0.0, 1.0)])
    assert ok and 0.0 <= x[0] <= 1.0
    ok, _ = feasible(bounds=[(2.0, None)], A_ub=[[1.0]], b_ub=[1.0])
    assert not ok
    ok, x = feasible(n=1)
    assert ok and x[0] == 0.0


def test_dimension_mismatch_is_config_error():
    with pytest.raises(LpConfigError):
        LinearProgram([1.0, 2.0], A_eq=[[1.0]], b_eq=[1.0])
    with pytest.raises(LpConfigError):
        LinearProgram([1.0], A_ub=[[1.0]], b_ub=[1.0, 2.0])
    with pytest.raises(LpConfigError):
        LinearProgram([1.0], bounds=[(2.0, 1.0)])


def _constructed_system(rng, feasible_case):
    n = int(rng.integers(1, 7))
    me, mu = int(rng.integers(0, 4)), int(rng.integers(1, 6))
    x0 = rng.standard_normal(n)
    Ae, Au = rng.standard_normal((me, n)), rng.standard_normal((mu, n))
    be, bu = Ae @ x0, Au @ x0 + rng.uniform(0, 1, mu)
    if not feasible_case:
        # a row and its negation with a gap of at least 1
        a = rng.standard_normal(n)
        Au = np.vstack([Au, a, -a])
        bu = np.concatenate([bu, [a @ x0], [-(a @ x0) - 1.0 - rng.uniform()]])
    return Ae, be, Au, bu, n


def test_status_matches_construction_on_200_systems():
    rng = np.random.default_rng(7)
    for i in range(200):
        want = bool(i % 2)
        Ae, be, Au, bu, n = _constructed_system(rng, want)
        ok, x = feasible(A_eq=Ae, b_eq=be, A_ub=Au, b_ub=bu, n=n)
        assert ok == want, i
        if ok:
            lp = LinearProgram(np.zeros(n), Ae, be, Au, bu, [(None, None)] * n)
            assert lp.violation(x) <= 1e-8


def _bounded_lp(rng):
    n = int(rng.integers(1, 6))
    m = int(rng.integers(1, 6))
    x0 = rng.uniform(0, 1, n)
    A = rng.standard_normal((m, n))
    b = A @ x0 + rng.uniform(0, 1, m)
    bounds = [(0.0, float(rng.uniform(1, 3))) for _ in range(n)]
    return LinearProgram(rng.standard_normal(n), A_ub=A, b_ub=b, bounds=bounds)


def test_agrees_with_scipy_without_fallback():
    rng = np.random.default_rng(3)
    for _ in range(150):
        lp = _bounded_lp(rng)
        ref = linprog(lp.c, A_ub=lp.A_ub, b_ub=lp.b_ub, bounds=lp.bounds, method="highs")
        out = solve(lp, fallback=False)
        assert out.optimal and ref.status == 0
        assert out.value == pytest.approx(ref.fun, abs=1e-8)
        assert lp.violation(out.x) <= 1e-9


def test_optimal_point_satisfies_constraints():
    rng = np.random.default_rng(4)
    for _ in range(50):
        lp = _bounded_lp(rng)
        out = solve(lp)
        assert out.optimal
        assert lp.violation(out.x) <= lp_core.FEAS_TOL


@given(st.integers(0, 2**32 - 1))
def test_deterministic(seed):
    lp = _bounded_lp(np.random.default_rng(seed))
    a, b = solve(lp), solve(lp)
    assert a.status is b.status
    np.testing.assert_array_equal(a.x, b.x)
    assert a.value == b.value


def test_degenerate_program_cycles_safely():
    # a classic cycling example under the textbook largest-coefficient rule
    c = [-10.0, 57.0, 9.0, 24.0]
    A = [[0.5, -5.5, -2.5, 9.0], [0.5, -1.5, -0.5, 1.0], [1.0, 0.0, 0.0, 0.0]]
    out = solve(LinearProgram(c, A_ub=A, b_ub=[0.0, 0.0, 1.0]))
    assert out.optimal
    assert out.value == pytest.approx(-1.0)
