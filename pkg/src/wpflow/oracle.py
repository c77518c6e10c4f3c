"""Exhaustive reference solver for small instances.

Enumerates every admissible source-to-sink path and maximises the path-flow
objective over the full simplex with a primal log-barrier Newton method.  It
deliberately shares nothing with :mod:`wpflow.solver` beyond the distance
matrix and the problem data, so the two can cross-check each other.
"""

from __future__ import annotations

import itertools
from typing import FrozenSet, List, Tuple

import numpy as np

from .metric import InputError
from .model import FlowProblem, FlowSolution, PathDecomposition, WeightedEmpirical

MAX_T = 12


class OracleConvergenceError(RuntimeError):
    pass


def enumerate_paths(T: int, forbidden: FrozenSet[Tuple[int, int]] = frozenset()) -> List[Tuple[int, ...]]:
    """All nonempty increasing node subsets of 1..T with no forbidden consecutive pair."""
    if T > MAX_T:
        raise InputError(f"exhaustive enumeration limited to T <= {MAX_T}")
    out = []
    for k in range(1, T + 1):
        for combo in itertools.combinations(range(1, T + 1), k):
            if all((a, b) not in forbidden for a, b in zip(combo, combo[1:])):
                out.append(combo)
    return out


def _woodbury_solve(x2: np.ndarray, A: np.ndarray, cinv: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(diag(1/x2) + A^T diag(1/cinv) A) z = rhs`` for one or more right-hand sides."""
    xr = x2[:, None] * rhs if rhs.ndim == 2 else x2 * rhs
    inner = np.diag(cinv) + (A * x2) @ A.T
    corr = np.linalg.solve(inner, A @ xr)
    return xr - (x2[:, None] * (A.T @ corr) if rhs.ndim == 2 else x2 * (A.T @ corr))


def solve_exact_small(problem: FlowProblem, gap_tol: float = 1e-10, max_newton: int = 20000) -> FlowSolution:
    T = problem.T
    if T > MAX_T:
        raise InputError(f"oracle limited to T <= {MAX_T}")
    paths = enumerate_paths(T, problem.forbidden)
    L = len(paths)
    d = problem.dist.d
    A = np.zeros((T, L))
    D = np.zeros(L)
    for i, p in enumerate(paths):
        A[np.asarray(p) - 1, i] = 1.0
        D[i] = sum(d[a - 1, b - 1] for a, b in zip(p, p[1:]))
    c = problem.lam * D

    def f(x):
        m = A @ x
        return -np.inf if np.any(m <= 0) else float(np.log(m).sum() - c @ x)

    x = np.full(L, 1.0 / L)
    t = 1.0
    t_final = 10.0 * L / gap_tol
    newton = 0
    while True:
        # centering for the current barrier weight
        for _ in range(200):
            newton += 1
            if newton > max_newton:
                raise OracleConvergenceError("barrier method exceeded its Newton budget")
            m = A @ x
            grad = t * (A.T @ (1.0 / m) - c) + 1.0 / x
            # the constraint absorbs constant shifts; removing one avoids cancellation
            grad -= x @ grad
            x2 = x * x
            cinv = m * m / t
            both = _woodbury_solve(x2, A, cinv, np.column_stack([grad, np.ones(L)]))
            qg, q1 = both[:, 0], both[:, 1]
            nu = qg.sum() / q1.sum()
            step = qg - nu * q1
            decrement = float(grad @ step - nu * step.sum())
            if decrement < 1e-14:
                break
            neg = step < 0
            s = 1.0
            if neg.any():
                s = min(1.0, 0.99 * float(np.min(-x[neg] / step[neg])))
            phi0 = t * f(x) + np.log(x).sum()
            slope = decrement
            while s > 1e-20:
                xn = x + s * step
                if np.all(xn > 0):
                    fn = f(xn)
                    if np.isfinite(fn) and t * fn + np.log(xn).sum() >= phi0 + 0.25 * s * slope:
                        break
                s *= 0.5
            x = xn / xn.sum()
        if t >= t_final:
            break
        t = min(t * 8.0, t_final)

    m = A @ x
    g = A.T @ (1.0 / m) - c
    mu = float(x @ g)
    gap = float(g.max() - mu)
    if gap > gap_tol:
        raise OracleConvergenceError(f"final gap {gap:.3g} above {gap_tol:g}")

    w = np.zeros((T + 2, T + 2))
    for p, xi in zip(paths, x):
        w[0, p[0]] += xi
        for a, b in zip(p, p[1:]):
            w[a, b] += xi
        w[p[-1], T + 1] += xi
    term = w[1 : T + 1, T + 1] / w[1 : T + 1, T + 1].sum()
    return FlowSolution(
        problem=problem,
        w=w,
        objective=float(np.log(m).sum() - c @ x),
        node_mass=m,
        terminal=WeightedEmpirical(term),
        mu_path=mu,
        gap=gap,
        decomposition=PathDecomposition(tuple(paths), x, D),
        iterations=newton,
    )
