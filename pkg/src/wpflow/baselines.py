"""Weighting schemes compared against the flow estimator."""

from __future__ import annotations

import numpy as np

from .metric import InputError, Metric
from .model import ObservationSeries, WeightedEmpirical, build_problem
from .solver import SolverOptions, solve


def saa_weights(T: int) -> WeightedEmpirical:
    if T < 1:
        raise InputError("need at least one observation")
    return WeightedEmpirical(np.full(T, 1.0 / T))


def window_weights(T: int, s: int) -> WeightedEmpirical:
    if not 1 <= s <= T:
        raise InputError(f"window size {s} outside 1..{T}")
    w = np.zeros(T)
    w[T - s :] = 1.0 / s
    return WeightedEmpirical(w)


def smoothing_weights(T: int, alpha: float) -> WeightedEmpirical:
    """Geometric decay (1 - alpha)^(T - t), normalised by the exact finite sum."""
    if T < 1:
        raise InputError("need at least one observation")
    if not 0.0 < alpha <= 1.0:
        raise InputError(f"decay rate {alpha} outside (0, 1]")
    ages = np.arange(T - 1, -1, -1, dtype=float)
    raw = (1.0 - alpha) ** ages
    return WeightedEmpirical(raw / raw.sum())


def wpf_weights(series: ObservationSeries, metric: Metric, lam: float, grouped: bool = False,
                opts: SolverOptions = SolverOptions()) -> WeightedEmpirical:
    return solve(build_problem(series, metric, lam, grouped=grouped), opts).terminal
