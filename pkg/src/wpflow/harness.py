"""Rolling out-of-sample evaluation, parameter tuning and test sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import saa_weights, smoothing_weights, window_weights
from .downstream import (PortfolioSpec, cvar, cvar_portfolio, forecast_cost,
                         weighted_regression_fit)
from .metric import InputError, Metric
from .model import ObservationSeries, build_problem
from .solver import SolverOptions, solve


def _decay_grid() -> Tuple[float, ...]:
    fine = [round(0.001 * k, 3) for k in range(1, 11)]
    mid = [round(0.01 * k, 2) for k in range(2, 11)]
    coarse = [round(0.1 * k, 1) for k in range(2, 10)]
    return tuple(fine + mid + coarse)


@dataclass(frozen=True)
class ParameterGrid:
    window: Tuple[int, ...]
    decay: Tuple[float, ...]
    penalty: Tuple[float, ...]

    def __post_init__(self):
        for name in ("window", "decay", "penalty"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise InputError(f"{name} grid is empty")
            if list(vals) != sorted(vals):
                raise InputError(f"{name} grid must be sorted ascending")
            object.__setattr__(self, name, vals)

    @classmethod
    def forecasting(cls) -> "ParameterGrid":
        lam = ([10.0 * k for k in range(1, 11)] + [100.0 * k for k in range(2, 11)]
               + [1000.0 * k for k in range(2, 11)])
        return cls(tuple(range(12, 169, 6)), _decay_grid(), tuple(lam))

    @classmethod
    def portfolio(cls) -> "ParameterGrid":
        lam = ([float(k) for k in range(1, 11)] + [10.0 * k for k in range(2, 11)]
               + [100.0 * k for k in range(2, 11)])
        return cls(tuple(range(4, 121, 4)), _decay_grid(), tuple(lam))


@dataclass(frozen=True)
class EvaluationConfig:
    train_fraction: float = 0.7
    warmup: int = 24
    tuning_window: int = 24
    grid: ParameterGrid = field(default_factory=ParameterGrid.forecasting)

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InputError("train_fraction must lie in (0, 1)")
        if self.warmup < 1 or self.tuning_window < 1:
            raise InputError("warmup and tuning_window must be at least 1")

    @classmethod
    def for_frequency(cls, periods_per_year: int, years: float = 2.0, **kw) -> "EvaluationConfig":
        """Warm-up and tuning window of ``years`` expressed in periods."""
        n = max(1, int(round(periods_per_year * years)))
        return cls(warmup=n, tuning_window=n, **kw)


# estimators: map a scenario series and one parameter value to weights

class SAAEstimator:
    name = "SAA"

    def __init__(self):
        self.grid: Tuple = (None,)

    def weights(self, scenarios: ObservationSeries, param) -> np.ndarray:
        return saa_weights(scenarios.T).weights


class WindowEstimator:
    name = "Windowing"

    def __init__(self, sizes: Sequence[int]):
        self.grid = tuple(sizes)

    def weights(self, scenarios: ObservationSeries, param) -> np.ndarray:
        # a window longer than the history is the whole history
        return window_weights(scenarios.T, min(int(param), scenarios.T)).weights


class SmoothingEstimator:
    name = "Smoothing"

    def __init__(self, rates: Sequence[float]):
        self.grid = tuple(rates)

    def weights(self, scenarios: ObservationSeries, param) -> np.ndarray:
        return smoothing_weights(scenarios.T, float(param)).weights


class WPFEstimator:
    """Flow estimator; each penalty value warm-starts from its previous, shorter prefix."""

    def __init__(self, penalties: Sequence[float], metric: Metric, grouped: bool = False,
                 opts: SolverOptions = SolverOptions()):
        self.grid = tuple(penalties)
        self.metric = metric
        self.grouped = grouped
        self.opts = opts
        self.name = f"WPF-{metric.label.upper()}"
        self._cache: Dict[float, Tuple[np.ndarray, list]] = {}

    def weights(self, scenarios: ObservationSeries, param) -> np.ndarray:
        lam = float(param)
        problem = build_problem(scenarios, self.metric, lam, grouped=self.grouped)
        init = None
        prev = self._cache.get(lam)
        T = scenarios.T
        if prev is not None and prev[0].shape[0] == T - 1 and np.array_equal(prev[0], scenarios.points[:-1]):
            init = [(p, f * (T - 1) / T) for p, f in prev[1]]
            init.append(((T,), 1.0 / T))
            if not all(problem.path_allowed(p) for p, _ in init):
                init = None
        sol = solve(problem, self.opts, init=init)
        self._cache[lam] = (scenarios.points.copy(),
                            list(zip(sol.decomposition.paths, sol.decomposition.flows)))
        return sol.terminal.weights


# tasks: turn weights on a history into a decision and score it on the next observation

class ForecastTask:
    """One-step log-price forecasting; scenarios are consecutive pairs (l_t, l_t+1)."""

    name = "forecast"
    min_history = 3

    def scenarios(self, history: ObservationSeries) -> ObservationSeries:
        pts = history.points
        return ObservationSeries(np.hstack([pts[:-1], pts[1:]]), history.periods[:-1].copy())

    def decide(self, history: ObservationSeries, weights: np.ndarray):
        # early prefixes can be rank deficient; the minimum-norm fit keeps the protocol running
        return weighted_regression_fit(history.points, weights, allow_rank_deficient=True)

    def cost(self, decision, history: ObservationSeries, outcome: np.ndarray) -> float:
        return forecast_cost(decision, history.points[-1], outcome)

    def aggregate(self, costs: np.ndarray) -> float:
        return float(np.mean(costs))


class PortfolioTask:
    """Long-only mean-CVaR allocation; scenarios are the past return vectors."""

    name = "portfolio"
    min_history = 1

    def __init__(self, spec: PortfolioSpec = PortfolioSpec()):
        self.spec = spec

    def scenarios(self, history: ObservationSeries) -> ObservationSeries:
        return history

    def decide(self, history: ObservationSeries, weights: np.ndarray):
        return cvar_portfolio(history.points, weights, self.spec).x

    def cost(self, decision, history: ObservationSeries, outcome: np.ndarray) -> float:
        return float(-decision @ outcome)

    def aggregate(self, costs: np.ndarray) -> float:
        costs = np.asarray(costs, dtype=float)
        p = np.full(costs.size, 1.0 / costs.size)
        return float((1.0 - self.spec.rho) * costs.mean() + self.spec.rho * cvar(costs, p, self.spec.beta))


@dataclass(frozen=True, eq=False)
class CostTrace:
    method: str
    times: np.ndarray  # decision period t; the cost is realised at t + 1
    costs: np.ndarray
    params: Tuple
    phases: Tuple[str, ...]
    grid: Tuple
    candidate_costs: np.ndarray  # (len(grid), len(times))

    @property
    def test_mask(self) -> np.ndarray:
        return np.asarray([p == "test" for p in self.phases])

    @property
    def test_costs(self) -> np.ndarray:
        return self.costs[self.test_mask]


def rolling_evaluate(series: ObservationSeries, estimator, task,
                     config: EvaluationConfig = EvaluationConfig()) -> CostTrace:
    """Sequential decisions with every-period parameter re-tuning.

    At decision period t only observations 1..t are visible.  Every grid value
    is evaluated at every period on its own prefix, and the parameter used at t
    is the one with the best aggregate cost over the previous ``tuning_window``
    decisions (first grid value on ties and before any history exists).
    """
    n = series.T
    first = max(config.warmup, task.min_history)
    times = np.arange(first, n)
    if times.size == 0:
        raise InputError(f"series of length {n} leaves no decision after a warm-up of {first}")
    train_end = int(np.floor(config.train_fraction * n))
    grid = tuple(estimator.grid)
    C = np.empty((len(grid), times.size))
    for idx, t in enumerate(times):
        hist = series.prefix(int(t))
        scen = task.scenarios(hist)
        outcome = series.points[t]
        for k, param in enumerate(grid):
            w = estimator.weights(scen, param)
            C[k, idx] = task.cost(task.decide(hist, w), hist, outcome)

    chosen = np.zeros(times.size, dtype=int)
    for idx in range(times.size):
        lo = max(0, idx - config.tuning_window)
        if idx > lo:
            scores = [task.aggregate(C[k, lo:idx]) for k in range(len(grid))]
            chosen[idx] = int(np.argmin(scores))
    costs = C[chosen, np.arange(times.size)]
    phases = tuple("train" if t + 1 <= train_end else "test" for t in times)
    return CostTrace(estimator.name, times, costs, tuple(grid[k] for k in chosen), phases, grid, C)


def paired_difference_stats(costs_a, costs_b) -> Tuple[float, float]:
    """Mean of a - b and its standard error."""
    a = np.asarray(costs_a, dtype=float)
    b = np.asarray(costs_b, dtype=float)
    if a.shape != b.shape:
        raise InputError("cost sequences must be aligned and of equal length")
    d = a - b
    if d.size < 2:
        return float(d.mean()), 0.0
    return float(d.mean()), float(d.std(ddof=1) / np.sqrt(d.size))


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    cost: float
    difference: float
    std_error: float


def compare(traces: Sequence[CostTrace], task, baseline: str = "SAA") -> List[ComparisonRow]:
    """Test-phase cost per method and its paired difference against ``baseline``."""
    ref = next((t for t in traces if t.method == baseline), traces[0])
    rows = []
    for tr in traces:
        diff, se = paired_difference_stats(tr.test_costs, ref.test_costs)
        rows.append(ComparisonRow(tr.method, task.aggregate(tr.test_costs), diff, se))
    return rows


# structured test sequences

def generate_switching_sequence(T: int, return_switches: bool = False):
    """Five zeros, then blocks of 1/-1 patterns switching on a 3:2 count imbalance.

    The "+" block repeats (1, 1, 1, -1) and the "-" block (-1, -1, -1, 1); the
    pattern restarts at every switch, and a block ends as soon as its majority
    symbol reaches 1.5 times the other symbol's count plus one.
    """
    if T < 6:
        raise InputError("sequence needs at least six observations")
    out = [0.0] * 5
    plus, pos, n_plus, n_minus = True, 0, 0, 0
    switches = []
    while len(out) < T:
        pattern = (1.0, 1.0, 1.0, -1.0) if plus else (-1.0, -1.0, -1.0, 1.0)
        v = pattern[pos % 4]
        pos += 1
        out.append(v)
        if v > 0:
            n_plus += 1
        else:
            n_minus += 1
        major, minor = (n_plus, n_minus) if plus else (n_minus, n_plus)
        if major >= 1.5 * minor + 1:
            switches.append(len(out))
            plus, pos = not plus, 0
    series = ObservationSeries.from_values(out)
    return (series, switches) if return_switches else series


def instability_probe(T_values: Sequence[int], lam: float = 4.0,
                      opts: SolverOptions = SolverOptions()) -> Dict[int, float]:
    """Mass routed through observation 6 (the first 1) for each sequence length."""
    metric = Metric("l2")
    out = {}
    for T in T_values:
        sol = solve(build_problem(generate_switching_sequence(int(T)), metric, lam), opts)
        out[int(T)] = float(sol.node_mass[5])
    return out


# synthetic data

@dataclass(frozen=True)
class SyntheticSpec:
    kind: str = "markov_switching"  # or "drifting_mean"
    length: int = 168
    dim: int = 3
    means: Tuple[Tuple[float, ...], ...] = ((0.01,), (-0.01,))
    sigma: float = 0.03
    switch_prob: float = 0.1
    drift: float = 0.0
    cumulative: bool = False

    def __post_init__(self):
        if self.kind not in ("markov_switching", "drifting_mean"):
            raise InputError(f"unknown process kind {self.kind!r}")
        if self.length < 1 or self.dim < 1:
            raise InputError("length and dim must be positive")
        if self.sigma < 0 or not 0.0 <= self.switch_prob <= 1.0:
            raise InputError("sigma must be nonnegative and switch_prob a probability")
        if len(self.means) < 1 or any(len(mv) not in (1, self.dim) for mv in self.means):
            raise InputError("each state mean must be a scalar or a dim-vector")


def generate_synthetic(spec: SyntheticSpec, seed: int, return_states: bool = False):
    """Seeded regime-switching or drifting-mean series.

    With ``cumulative=True`` the draws are increments and the series is their
    running sum, a convenient stand-in for monthly log prices.
    """
    rng = np.random.default_rng(seed)
    n, m = spec.length, spec.dim
    means = np.array([np.broadcast_to(np.asarray(mv, dtype=float), (m,)) for mv in spec.means])
    states = np.zeros(n, dtype=int)
    if spec.kind == "markov_switching":
        k = len(means)
        for t in range(1, n):
            s = states[t - 1]
            if k > 1 and rng.random() < spec.switch_prob:
                s = (s + 1 + rng.integers(k - 1)) % k
            states[t] = s
        centre = means[states]
    else:
        centre = means[0] + spec.drift * np.arange(n)[:, None]
    draws = centre + spec.sigma * rng.standard_normal((n, m))
    values = np.cumsum(draws, axis=0) if spec.cumulative else draws
    series = ObservationSeries.from_values(values)
    return (series, states) if return_states else series
