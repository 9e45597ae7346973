import numpy as np
import pytest

from plantsim.simplex import Infeasible, LinearProgram, Unbounded, solve_lp


def test_single_variable_box():
    lp = LinearProgram(c=[1.0], a_ub=[[1.0]], b_ub=[1.0])
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(1.0)
    assert sol.x[0] == pytest.approx(1.0)


def test_degenerate_optimum_face():
    lp = LinearProgram(c=[1.0, 1.0], a_ub=[[1.0, 1.0]], b_ub=[1.0])
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(1.0)


def test_equality_constraints():
    # max x + 2y  s.t. x + y = 1
    lp = LinearProgram(c=[1.0, 2.0], a_eq=[[1.0, 1.0]], b_eq=[1.0])
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(2.0)
    assert sol.x.tolist() == pytest.approx([0.0, 1.0])


def test_upper_bounds():
    lp = LinearProgram(c=[1.0, 1.0], a_ub=[[1.0, 1.0]], b_ub=[3.0], upper=[1.0, 1.0])
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(2.0)


def test_negative_rhs_normalized():
    # -x <= -2  means x >= 2; minimize nothing else, so value is -2 for c=[-1]
    lp = LinearProgram(c=[-1.0], a_ub=[[-1.0], [1.0]], b_ub=[-2.0, 5.0])
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(-2.0)
    assert sol.x[0] == pytest.approx(2.0)


def test_infeasible_detected():
    lp = LinearProgram(c=[1.0], a_eq=[[1.0]], b_eq=[2.0], a_ub=[[1.0]], b_ub=[1.0])
    with pytest.raises(Infeasible):
        solve_lp(lp)


def test_unbounded_detected():
    lp = LinearProgram(c=[1.0])
    with pytest.raises(Unbounded):
        solve_lp(lp)


def test_redundant_equalities_ok():
    lp = LinearProgram(
        c=[1.0, 1.0],
        a_eq=[[1.0, 1.0], [2.0, 2.0]],
        b_eq=[1.0, 2.0],
    )
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(1.0)


def test_deterministic_resolve():
    lp = LinearProgram(
        c=[3.0, 1.0, 2.0],
        a_ub=[[1.0, 1.0, 3.0], [2.0, 2.0, 5.0], [4.0, 1.0, 2.0]],
        b_ub=[30.0, 24.0, 36.0],
    )
    a = solve_lp(lp)
    b = solve_lp(lp)
    assert a.value == b.value
    assert np.array_equal(a.x, b.x)
    assert a.value == pytest.approx(28.0)  # classic textbook optimum


def test_cycling_guard_degenerate_lp():
    # a well-known degenerate instance that cycles under naive pivoting
    lp = LinearProgram(
        c=[10.0, -57.0, -9.0, -24.0],
        a_ub=[
            [0.5, -5.5, -2.5, 9.0],
            [0.5, -1.5, -0.5, 1.0],
            [1.0, 0.0, 0.0, 0.0],
        ],
        b_ub=[0.0, 0.0, 1.0],
    )
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(1.0)


def test_random_lps_against_feasible_enumeration(rng):
    # small random LPs with box bounds: compare to dense vertex sampling
    for _ in range(20):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        c = rng.uniform(-2, 2, size=n)
        A = rng.uniform(0.2, 1.5, size=(m, n))
        b = rng.uniform(1.0, 4.0, size=m)
        lp = LinearProgram(
            c=c.tolist(),
            a_ub=A.tolist(),
            b_ub=b.tolist(),
            upper=[2.0] * n,
        )
        sol = solve_lp(lp)
        # grid check: no feasible grid point beats the reported optimum
        grid = np.linspace(0, 2.0, 9)
        best = 0.0
        pts = np.stack(np.meshgrid(*([grid] * n)), axis=-1).reshape(-1, n)
        ok = (pts @ A.T <= b[None, :] + 1e-9).all(axis=1)
        vals = pts @ c
        best = vals[ok].max()
        assert sol.value >= best - 1e-9
