import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wpflow import DistanceMatrix, InputError, Metric, distance, pairwise_distances

vec = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3)
kinds = st.sampled_from(["l1", "l2", "linf"])


def make(kind, delta0):
    return Metric.parse(kind, delta0)


@settings(max_examples=200, deadline=None)
@given(vec, vec, vec, kinds, st.sampled_from([0.0, 0.5]))
def test_metric_axioms(a, b, c, kind, delta0):
    m = make(kind, delta0)
    dab = distance(a, b, m)
    assert dab >= 0
    assert dab == distance(b, a, m)
    assert distance(a, a, m) == 0
    slack = 1e-9 * (1 + abs(dab))
    assert dab <= distance(a, c, m) + distance(c, b, m) + slack


def test_norm_values():
    a, b = [0.0, 0.0], [3.0, -4.0]
    assert distance(a, b, Metric("l1")) == 7.0
    assert distance(a, b, Metric("l2")) == 5.0
    assert distance(a, b, Metric("linf")) == 4.0


def test_adjusted_adds_fixed_cost_only_between_distinct_points():
    m = Metric.parse("l2", 0.25)
    assert m.kind == "adjusted" and m.label == "l2+0.25"
    assert distance([1.0], [1.0], m) == 0.0
    assert distance([1.0], [2.0], m) == pytest.approx(1.25)


def test_scalar_inputs_are_one_dimensional():
    assert distance(6.13, 7.85, Metric("l2")) == pytest.approx(1.72)


def test_bad_inputs():
    with pytest.raises(InputError):
        distance([1.0, 2.0], [1.0], Metric("l2"))
    with pytest.raises(InputError):
        Metric("l3")
    with pytest.raises(InputError):
        Metric("adjusted", base=Metric("l1"), delta0=0.0)


@pytest.mark.parametrize("kind", ["l1", "l2", "linf"])
def test_pairwise_matches_distance(kind):
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(7, 3))
    m = Metric.parse(kind, 0.1)
    D = pairwise_distances(pts, m)
    assert isinstance(D, DistanceMatrix) and D.n == 7
    for i in range(7):
        for j in range(7):
            assert D[i, j] == pytest.approx(distance(pts[i], pts[j], m), abs=1e-12)
    assert np.array_equal(D.d, D.d.T)
    with pytest.raises(ValueError):
        D.d[0, 1] = 1.0
