import numpy as np
import pytest

from wpflow import DistanceMatrix, Metric, ObservationSeries, build_problem, pairwise_distances, solve
from wpflow.analysis import (Component, component_bounds_check, components,
                             swap_monotonicity_test, unique_subset_sums_check)

from conftest import SIX_POINT, random_series


def chain(*gaps):
    x = np.concatenate([[0.0], np.cumsum(gaps)])
    return pairwise_distances(x, Metric("l1"))


def test_six_point_components(six_point, l2):
    sol = solve(build_problem(six_point, l2, 4.0))
    comps = components(sol)
    assert [c.nodes for c in comps] == [(1, 3, 6), (2,), (4, 5)]
    assert sum(c.mass for c in comps) == pytest.approx(1.0, abs=1e-12)
    for c in comps:
        sink = sum(sol.w[i, 7] for i in c.nodes)
        assert c.mass == pytest.approx(sink, abs=1e-9)
        assert component_bounds_check(c, sol.mu_path, 4.0).holds
    single = comps[1]
    assert single.mass == pytest.approx(0.275, abs=1e-3)
    assert 1 / single.mass == pytest.approx(sol.mu_path, abs=1e-8)


def test_component_limits():
    rng = np.random.default_rng(3)
    s = random_series(rng, 7, 2)
    assert [c.nodes for c in components(solve(build_problem(s, Metric("l2"), 0.0)))] == [tuple(range(1, 8))]
    assert len(components(solve(build_problem(s, Metric("l2"), 1e6)))) == 7


def test_singleton_bounds_collapse():
    c = Component((4,), 0.25, 0.0, (0,))
    b = component_bounds_check(c, 4.0, 10.0)
    assert b.lower == b.upper == 0.25 and b.holds
    assert not component_bounds_check(Component((4,), 0.3, 0.0, (0,)), 4.0, 10.0).holds


def test_bounds_hold_on_random_solutions():
    rng = np.random.default_rng(17)
    for _ in range(15):
        lam = float(rng.choice([0.1, 1.0, 4.0]))
        sol = solve(build_problem(random_series(rng, 10, 2), Metric("l1"), lam))
        comps = components(sol)
        singles = [c.mass for c in comps if len(c) == 1]
        assert np.allclose(singles, 1 / sol.mu_path, atol=1e-8)
        assert all(component_bounds_check(c, sol.mu_path, lam).holds for c in comps)
        nodes = sorted(i for c in comps for i in c.nodes)
        assert nodes == list(range(1, 11))


def test_subset_sums_on_chains():
    assert unique_subset_sums_check(chain(1, 2, 4), mode="increasing").passed
    # collinear points always tie once backward moves are allowed: 2 -> 1 -> 3 vs 2 -> 3 plus 1 -> 2
    assert unique_subset_sums_check(chain(1, 2, 4), mode="any").status == "fail"
    bad = unique_subset_sums_check(chain(1, 2, 3), mode="increasing")
    assert bad.status == "fail"
    left, right = bad.witness
    assert sorted([tuple(sorted(left)), tuple(sorted(right))]) == [(1.0, 2.0), (3.0,)]


def test_subset_sums_modes_on_six_points():
    D = pairwise_distances(np.asarray(SIX_POINT), Metric("l2"))
    # single-path distance sets are generic here; the set of all distances is not,
    # because in one dimension 1 -> 2 costs the same as 1 -> 3 -> 2
    assert unique_subset_sums_check(D, mode="any").passed
    assert unique_subset_sums_check(D, mode="increasing").passed
    report = unique_subset_sums_check(D, mode="all")
    assert report.status == "fail"
    assert sum(report.witness[0]) == pytest.approx(sum(report.witness[1]), abs=1e-9)


def test_subset_sums_any_order_catches_backward_paths():
    # 3 -> 1 -> 2: distances 2 and 1 on the chain 0, 1, 2 ... plus 3 -> 4 of length 3
    x = np.array([0.0, 1.0, 2.0, 5.0])
    D = pairwise_distances(x, Metric("l1"))
    assert unique_subset_sums_check(D, mode="any").status == "fail"


def test_subset_sums_generic_planar_points():
    D = pairwise_distances(np.random.default_rng(0).normal(size=(6, 2)), Metric("l2"))
    for mode in ("any", "increasing"):
        assert unique_subset_sums_check(D, mode=mode).passed


def test_subset_sums_unsupported_sizes():
    D = pairwise_distances(np.random.default_rng(0).normal(size=(17, 2)), Metric("l2"))
    assert unique_subset_sums_check(D, mode="increasing").status == "unsupported"
    assert not unique_subset_sums_check(D, mode="increasing").passed
    D10 = pairwise_distances(np.random.default_rng(0).normal(size=(10, 2)), Metric("l2"))
    assert unique_subset_sums_check(D10).status == "unsupported"


def test_zero_distances_are_ignored():
    D = DistanceMatrix(np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]))
    assert unique_subset_sums_check(D, mode="increasing").passed


def test_swap_between_components(six_point, l2):
    report = swap_monotonicity_test(six_point, l2, 4.0, 3)
    assert report.applicable and report.holds
    assert report.weight_before == pytest.approx(0.0214424478, abs=1e-8)
    assert report.weight_after <= report.weight_before + 1e-7
    # 7.85 sits alone; moving it one step later leaves its weight at 1/mu
    moved = solve(build_problem(six_point.swapped(3), l2, 4.0))
    assert moved.terminal.weights[2] == pytest.approx(0.2749426173, abs=1e-8)


def test_swap_inside_component_is_inapplicable(six_point, l2):
    assert not swap_monotonicity_test(six_point, l2, 4.0, 5).applicable


def test_swap_two_distant_singletons():
    s = ObservationSeries.from_values([0.0, 100.0])
    r = swap_monotonicity_test(s, Metric("l2"), 1.0, 2)
    assert r.applicable and r.weight_before == pytest.approx(0.5) and r.weight_after == pytest.approx(0.5)
    with pytest.raises(ValueError):
        swap_monotonicity_test(s, Metric("l2"), 1.0, 1)
