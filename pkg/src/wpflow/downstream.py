"""Decision problems driven by a weighted empirical distribution.

Two tasks: a weighted least-squares log-price regression used for one-step
forecasts, and a mean-CVaR portfolio solved as a linear program.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metric import InputError
from .simplex import LinearProgram, LPResult, simplex_solve


class SingularDesignError(InputError):
    pass


@dataclass(frozen=True, eq=False)
class RegressionModel:
    mu: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.mu)) and np.all(np.isfinite(self.A))):
            raise InputError("regression coefficients must be finite")

    def predict(self, ell: np.ndarray) -> np.ndarray:
        return self.mu + self.A @ np.asarray(ell, dtype=float)


def _check_weights(weights: np.ndarray, n: int) -> np.ndarray:
    p = np.asarray(weights, dtype=float).reshape(-1)
    if p.size != n:
        raise InputError(f"expected {n} weights, got {p.size}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InputError("weights must be nonnegative and sum to 1")
    return p


def weighted_regression_fit(log_prices, weights, allow_rank_deficient: bool = False) -> RegressionModel:
    """Fit l_{t+1} ~ mu + A l_t by weighted least squares.

    ``weights[t]`` weighs the pair (l_t, l_{t+1}).  A rank-deficient weighted
    design raises :class:`SingularDesignError` unless ``allow_rank_deficient``
    is set, in which case the minimum-norm solution is returned.
    """
    ell = np.asarray(log_prices, dtype=float)
    if ell.ndim == 1:
        ell = ell[:, None]
    T, m = ell.shape
    if T < 2:
        raise InputError("need at least two periods to form a pair")
    p = _check_weights(weights, T - 1)
    X = np.hstack([np.ones((T - 1, 1)), ell[:-1]])
    Y = ell[1:]
    s = np.sqrt(p)[:, None]
    B, _, rank, _ = np.linalg.lstsq(s * X, s * Y, rcond=None)
    if rank < m + 1 and not allow_rank_deficient:
        raise SingularDesignError(
            f"weighted design [1, l_t] has rank {rank} < {m + 1} "
            f"({int(np.count_nonzero(p))} pairs carry weight)")
    return RegressionModel(B[0].copy(), B[1:].T.copy())


def regression_objective(model: RegressionModel, log_prices, weights) -> float:
    ell = np.asarray(log_prices, dtype=float)
    if ell.ndim == 1:
        ell = ell[:, None]
    resid = ell[1:] - (model.mu + ell[:-1] @ model.A.T)
    return float(np.asarray(weights, dtype=float) @ np.sum(resid * resid, axis=1))


def forecast_cost(model: RegressionModel, ell_T, ell_next) -> float:
    ell_T = np.atleast_1d(np.asarray(ell_T, dtype=float))
    ell_next = np.atleast_1d(np.asarray(ell_next, dtype=float))
    if ell_T.shape != model.mu.shape or ell_next.shape != model.mu.shape:
        raise InputError("dimension mismatch between model and observations")
    r = ell_next - model.predict(ell_T)
    return float(r @ r)


@dataclass(frozen=True)
class PortfolioSpec:
    rho: float = 0.9
    beta: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise InputError(f"rho {self.rho} outside [0, 1]")
        if not 0.0 < self.beta <= 1.0:
            raise InputError(f"beta {self.beta} outside (0, 1]")


def cvar(losses, probs, beta: float) -> float:
    """Expected loss over the worst ``beta`` probability mass."""
    if not 0.0 < beta <= 1.0:
        raise InputError(f"beta {beta} outside (0, 1]")
    losses = np.asarray(losses, dtype=float).reshape(-1)
    probs = np.asarray(probs, dtype=float).reshape(-1)
    order = np.argsort(-losses, kind="stable")
    l, p = losses[order], probs[order]
    before = np.cumsum(p) - p
    take = np.clip(beta - before, 0.0, p)
    return float(take @ l / beta)


def portfolio_objective(x, returns, probs, spec: PortfolioSpec) -> float:
    """(1 - rho) * expected loss + rho * CVaR of the loss -x.xi."""
    losses = -np.asarray(returns, dtype=float) @ np.asarray(x, dtype=float)
    probs = np.asarray(probs, dtype=float)
    return float((1.0 - spec.rho) * (probs @ losses) + spec.rho * cvar(losses, probs, spec.beta))


@dataclass(frozen=True, eq=False)
class PortfolioResult:
    x: np.ndarray
    tau: float
    objective: float
    lp: LPResult


def cvar_portfolio(returns, weights, spec: PortfolioSpec = PortfolioSpec()) -> PortfolioResult:
    """Long-only allocation minimising the mean-CVaR objective.

    CVaR enters through its minimisation formula over a threshold tau, with
    one epigraph variable per scenario carrying positive weight.
    """
    xi = np.asarray(returns, dtype=float)
    if xi.ndim == 1:
        xi = xi[:, None]
    T, m = xi.shape
    p = _check_weights(weights, T)
    live = p > 0
    xi, p = xi[live], p[live]
    k = len(p)
    rho, beta = spec.rho, spec.beta

    # variables: x (m), tau (1, free), u (k)
    n = m + 1 + k
    c = np.concatenate([-(1.0 - rho) * (p @ xi), [rho], (rho / beta) * p])
    A = np.zeros((k + 1, n))
    A[:k, :m] = -xi
    A[:k, m] = -1.0
    A[:k, m + 1 :] = -np.eye(k)
    A[k, :m] = 1.0
    b = np.zeros(k + 1)
    b[k] = 1.0
    lower = np.zeros(n)
    lower[m] = -np.inf
    lp = LinearProgram(c, A, ("<=",) * k + ("=",), b, lower=lower)
    res = simplex_solve(lp)
    x = np.clip(res.x[:m], 0.0, None)
    x = x / x.sum()
    return PortfolioResult(x, float(res.x[m]), res.objective, res)
