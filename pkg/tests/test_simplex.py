import numpy as np
import pytest

from wpflow.simplex import (InfeasibleLP, IterationLimit, LinearProgram, UnboundedLP,
                            simplex_solve)


def test_single_variable_max():
    r = simplex_solve(LinearProgram([1.0], [[1.0]], ("<=",), [1.0], maximize=True))
    assert r.x[0] == pytest.approx(1.0) and r.objective == pytest.approx(1.0)
    assert r.duals[0] == pytest.approx(1.0)


def test_textbook_program():
    # max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], ("<=",) * 3, [4, 12, 18], maximize=True)
    r = simplex_solve(lp)
    assert np.allclose(r.x, [2, 6]) and r.objective == pytest.approx(36)
    assert np.allclose(r.duals, [0, 1.5, 1])
    assert r.duality_gap <= 1e-9


def test_equality_ge_and_free_variables():
    # min x + y, x + y = 2, x - y >= -4, x free, y in [0, 1]
    lp = LinearProgram([1, 1], [[1, 1], [1, -1]], ("=", ">="), [2, -4],
                       lower=[-np.inf, 0], upper=[np.inf, 1])
    r = simplex_solve(lp)
    assert r.objective == pytest.approx(2.0)
    assert r.x.sum() == pytest.approx(2.0) and r.x[0] - r.x[1] >= -4 - 1e-9
    assert 0 <= r.x[1] <= 1 + 1e-12


def test_degenerate_redundant_rows_with_bland():
    # the second and third rows repeat the first; the origin is degenerate
    A = [[1, 1, 1], [1, 1, 1], [2, 2, 2], [1, -1, 0]]
    lp = LinearProgram([-1, -2, -3], A, ("<=", "<=", "<=", "<="), [1, 1, 2, 0])
    for run in (0, 50):
        r = simplex_solve(lp, degenerate_run=run)
        assert r.objective == pytest.approx(-3.0)
    eq = LinearProgram([1, 2], [[1, 1], [2, 2]], ("=", "="), [1, 2])
    r = simplex_solve(eq, degenerate_run=0)
    assert np.allclose(r.x, [1, 0]) and r.duality_gap <= 1e-9


def test_infeasible_certificate():
    lp = LinearProgram([1, 1], [[1, 1], [1, 1]], ("<=", ">="), [1, 3])
    with pytest.raises(InfeasibleLP) as e:
        simplex_solve(lp)
    assert e.value.infeasibility > 0.5
    assert np.any(e.value.farkas != 0)


def test_unbounded_ray():
    lp = LinearProgram([-1, 0], [[0, 1]], ("<=",), [1])
    with pytest.raises(UnboundedLP) as e:
        simplex_solve(lp)
    d = e.value.ray
    assert lp.c @ d < 0 and np.all(lp.A @ d <= 1e-12) and np.all(d >= -1e-12)
    # same direction but capped by a row
    capped = LinearProgram([1, -1], [[1, -1]], ("<=",), [1], maximize=True)
    assert simplex_solve(capped).objective == pytest.approx(1.0)


def test_iteration_limit():
    lp = LinearProgram([3, 5], [[1, 0], [0, 2], [3, 2]], ("<=",) * 3, [4, 12, 18], maximize=True)
    with pytest.raises(IterationLimit):
        simplex_solve(lp, max_iter=1)


def test_bad_inputs():
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ("<",), [1])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ("<=",), [1, 2])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ("<=",), [1], lower=[2], upper=[1])


def test_random_programs_strong_duality():
    rng = np.random.default_rng(11)
    for _ in range(40):
        m, n = rng.integers(2, 6), rng.integers(2, 7)
        A = rng.normal(size=(m, n))
        x_feas = rng.uniform(0, 1, n)
        b = A @ x_feas + rng.uniform(0, 1, m)
        c = rng.normal(size=n)
        lp = LinearProgram(c, A, ("<=",) * m, b, upper=np.full(n, 3.0))
        for run in (0, 50):
            r = simplex_solve(lp, degenerate_run=run)
            assert np.all(A @ r.x <= b + 1e-8) and np.all(r.x >= -1e-12) and np.all(r.x <= 3 + 1e-9)
            assert r.duality_gap <= 1e-8
            assert c @ r.x <= c @ x_feas + 1e-9
            assert np.all(r.reduced_costs >= -1e-8)
