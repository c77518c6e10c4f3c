import numpy as np
import pytest

from wpflow import InputError, Metric, build_problem, solve
from wpflow.baselines import saa_weights, smoothing_weights, window_weights, wpf_weights

from conftest import random_series


def test_saa():
    assert np.allclose(saa_weights(4).weights, 0.25)
    assert saa_weights(1).weights.tolist() == [1.0]
    for T in (1, 7, 999, 1000):
        assert abs(saa_weights(T).weights.sum() - 1) <= 1e-12


def test_window():
    assert window_weights(5, 2).weights.tolist() == [0, 0, 0, 0.5, 0.5]
    assert np.allclose(window_weights(6, 6).weights, saa_weights(6).weights)
    assert window_weights(3, 1).weights.tolist() == [0, 0, 1]
    for s in (0, 4):
        with pytest.raises(InputError):
            window_weights(3, s)


def test_smoothing():
    assert smoothing_weights(4, 1.0).weights.tolist() == [0, 0, 0, 1]
    assert np.allclose(smoothing_weights(2, 0.5).weights, [1 / 3, 2 / 3])
    w = smoothing_weights(50, 0.1).weights
    assert np.all(np.diff(w) > 0) and abs(w.sum() - 1) <= 1e-12
    for a in (0.0, 1.5):
        with pytest.raises(InputError):
            smoothing_weights(3, a)


def test_wpf_weights(six_point, l2):
    w = wpf_weights(six_point, l2, 4.0).weights
    assert np.allclose(w, [0, 0.275, 0.021, 0, 0.325, 0.379], atol=1e-3)
    rng = np.random.default_rng(1)
    s = random_series(rng, 9, 2)
    assert np.allclose(wpf_weights(s, Metric("l2"), 1e6).weights, saa_weights(9).weights, atol=1e-9)
    w0 = wpf_weights(s, Metric("l2"), 0.0).weights
    assert abs(w0.sum() - 1) <= 1e-12 and np.all(w0 >= 0)


def test_wpf_age_monotonicity_spot_check():
    from wpflow.analysis import swap_monotonicity_test
    rng = np.random.default_rng(6)
    seen = 0
    for _ in range(20):
        s = random_series(rng, 7, 2)
        for i0 in range(2, 8):
            r = swap_monotonicity_test(s, Metric("l2"), 3.0, i0)
            assert r.holds
            seen += r.applicable
    assert seen >= 50
