import numpy as np
import pytest

from wpflow import Metric, ObservationSeries

SIX_POINT = (6.13, 7.85, 6.47, 4.91, 5.54, 7.13)


@pytest.fixture
def six_point():
    return ObservationSeries.from_values(SIX_POINT)


@pytest.fixture
def l2():
    return Metric("l2")


def random_series(rng, T, m, grouped=False):
    pts = rng.normal(size=(T, m))
    periods = None
    if grouped:
        periods = np.cumsum(np.r_[1, rng.integers(0, 2, T - 1)])
    return ObservationSeries.from_values(pts, periods)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
