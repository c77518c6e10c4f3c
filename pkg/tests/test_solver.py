import numpy as np
import pytest

from wpflow import (ConvergenceError, InputError, Metric, ObservationSeries, SolverOptions,
                    best_path, build_problem, check_feasible, decompose_flow, kkt_gap,
                    restricted_solve, solve)
from wpflow.solver import path_derivatives

from conftest import random_series

# values frozen from the independent exhaustive solver
SIX_POINT_OBJECTIVE = -8.705204119
SIX_POINT_TERMINAL = (0.0, 0.2749426173, 0.0214424478, 0.0, 0.3248270561, 0.3787878788)
SIX_POINT_MU = 3.637122574


def test_six_point_solution(six_point, l2):
    sol = solve(build_problem(six_point, l2, 4.0))
    assert sol.objective == pytest.approx(SIX_POINT_OBJECTIVE, abs=1e-8)
    assert np.allclose(sol.terminal.weights, SIX_POINT_TERMINAL, atol=1e-8)
    assert sol.mu_path == pytest.approx(SIX_POINT_MU, abs=1e-7)
    assert sol.gap <= 1e-8
    assert sorted(sol.decomposition.paths) == [(1, 3), (1, 3, 6), (2,), (4, 5)]
    assert check_feasible(sol.problem, sol.w) == []
    assert np.allclose(sol.source.sum(), 1.0)


def test_history_is_monotone(six_point, l2):
    sol = solve(build_problem(six_point, l2, 1.0))
    h = np.asarray(sol.history)
    assert np.all(np.diff(h) >= -1e-11 * np.abs(h[1:]))


def test_lambda_limits():
    rng = np.random.default_rng(2)
    s = random_series(rng, 8, 2)
    zero = solve(build_problem(s, Metric("l1"), 0.0))
    assert zero.objective == 0.0 or abs(zero.objective) < 1e-12
    assert zero.decomposition.paths == (tuple(range(1, 9)),)
    assert zero.terminal.weights[-1] == pytest.approx(1.0)
    big = solve(build_problem(s, Metric("l1"), 1e6))
    assert np.allclose(big.terminal.weights, 1 / 8, atol=1e-12)


def test_single_observation():
    sol = solve(build_problem(ObservationSeries.from_values([3.0]), Metric("l2"), 2.0))
    assert sol.terminal.weights.tolist() == [1.0] and sol.objective == 0.0


def test_identical_observations_pool_into_one_chain():
    s = ObservationSeries.from_values([1.0, 1.0, 1.0])
    sol = solve(build_problem(s, Metric("l2"), 5.0))
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    assert sol.terminal.weights[-1] == pytest.approx(1.0)


def test_warm_start_reaches_the_same_optimum(six_point, l2):
    pr = build_problem(six_point, l2, 4.0)
    cold = solve(pr)
    warm = solve(pr, init=[((1, 2, 3, 4, 5, 6), 0.5), ((2,), 0.5)])
    assert warm.objective == pytest.approx(cold.objective, abs=1e-10)
    assert np.allclose(warm.terminal.weights, cold.terminal.weights, atol=1e-7)
    with pytest.raises(InputError):
        solve(pr, init=[((1, 2), 1.0)])


def test_iteration_cap_raises_with_best_iterate():
    rng = np.random.default_rng(4)
    pr = build_problem(random_series(rng, 30, 2), Metric("l2"), 0.5)
    with pytest.raises(ConvergenceError) as info:
        solve(pr, SolverOptions(max_iters=1))
    assert info.value.best is not None and info.value.gap > 1e-8


def test_grouped_solution_uses_no_intra_period_arc():
    rng = np.random.default_rng(8)
    s = random_series(rng, 10, 1, grouped=True)
    sol = solve(build_problem(s, Metric("l2"), 0.3, grouped=True))
    for (i, j) in sol.problem.forbidden:
        assert sol.w[i, j] == 0.0
    assert check_feasible(sol.problem, sol.w) == []


def test_active_paths_share_the_multiplier():
    rng = np.random.default_rng(9)
    for _ in range(5):
        sol = solve(build_problem(random_series(rng, 12, 2), Metric("l1"), 0.7))
        g = path_derivatives(sol.problem, sol.decomposition)
        assert np.allclose(g, sol.mu_path, atol=1e-7)
        assert kkt_gap(sol.problem, sol.decomposition) <= 1e-8


def test_best_path_rejects_zero_mass(six_point, l2):
    pr = build_problem(six_point, l2, 4.0)
    path, value = best_path(pr, np.full(6, 1 / 6))
    assert path == (1, 2, 3, 4, 5, 6) or value >= 6.0
    with pytest.raises(InputError):
        best_path(pr, np.zeros(6))


def test_restricted_solve_on_the_optimal_paths(six_point, l2):
    pr = build_problem(six_point, l2, 4.0)
    paths, flows = restricted_solve([(1, 3, 6), (1, 3), (2,), (4, 5)], pr)
    full = solve(pr)
    got = dict(zip(paths, flows))
    want = dict(zip(full.decomposition.paths, full.decomposition.flows))
    assert got.keys() == want.keys()
    assert all(abs(got[p] - want[p]) < 1e-9 for p in got)
    with pytest.raises(InputError):
        restricted_solve([(1, 2)], pr)


def test_decompose_flow_round_trip(six_point, l2):
    sol = solve(build_problem(six_point, l2, 4.0))
    dec = decompose_flow(sol.w, sol.problem)
    assert np.allclose(dec.recompose(6), sol.w, atol=1e-12)
    assert np.all(np.isfinite(dec.path_distance))
    broken = sol.w.copy()
    broken[1, 3] += 0.1
    with pytest.raises(InputError):
        decompose_flow(broken)


def test_options_validation():
    with pytest.raises(InputError):
        SolverOptions(gap_tol=0.0)
