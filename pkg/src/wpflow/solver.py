"""Fully-corrective Frank-Wolfe on the path-flow form of the reduced program.

The problem over path flows ``x`` on the simplex is

    maximise  sum_j log(sum_{P ni j} x_P) - lam * sum_P x_P D(P)

Its gradient with respect to ``x_P`` is ``sum_{j in P} 1/mass_j - lam D(P)``,
and maximising that linear form over *all* paths is a longest-path problem on
the observation DAG (``best_path``).  The solver keeps a small active set of
paths, solves the problem restricted to it with a face-wise Newton method, and
adds the best path until the best-path derivative exceeds the active average
by at most ``gap_tol``.  At that point every active derivative equals the
common multiplier ``mu_path`` and no path beats it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .metric import InputError
from .model import (CONSERVATION_TOL, FlowProblem, FlowSolution, Path, PathDecomposition,
                    WeightedEmpirical, check_feasible, node_masses, objective)

log = logging.getLogger(__name__)

PRUNE = 1e-14


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted; carries the best iterate found."""

    def __init__(self, message: str, best: Optional[FlowSolution], gap: float):
        super().__init__(message)
        self.best = best
        self.gap = gap


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (ascent, conservation, ...)."""


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-8
    max_iters: int = 100000
    inner_tol: float = 1e-12

    def __post_init__(self):
        if not (self.gap_tol > 0 and self.max_iters > 0 and self.inner_tol > 0):
            raise InputError("solver options must be positive")


def best_path(problem: FlowProblem, node_mass) -> Tuple[Path, float]:
    """Path maximising ``sum 1/node_mass - lam * D`` (1-based nodes) and its value."""
    mass = np.asarray(node_mass, dtype=float)
    if mass.shape != (problem.T,) or np.any(mass <= 0):
        raise InputError("node masses must be strictly positive, one per observation")
    path, value = kernels.best_path(
        np.ascontiguousarray(1.0 / mass),
        np.ascontiguousarray(problem.dist.d),
        float(problem.lam),
        np.ascontiguousarray(problem.allowed, dtype=np.uint8),
    )
    return tuple(int(j) + 1 for j in path), float(value)


class _Active:
    """Active path set with its node-path incidence matrix and penalty vector."""

    def __init__(self, problem: FlowProblem, paths: Sequence[Path]):
        self.problem = problem
        self.paths: List[Path] = []
        self.index: Dict[Path, int] = {}
        self._cols: List[np.ndarray] = []
        self._cost: List[float] = []
        for p in paths:
            self.add(p)

    def add(self, path: Path) -> int:
        path = tuple(path)
        if not self.problem.path_allowed(path):
            raise InputError(f"path {path} is not admissible for this problem")
        if path in self.index:
            return self.index[path]
        col = np.zeros(self.problem.T)
        col[np.asarray(path) - 1] = 1.0
        self.index[path] = len(self.paths)
        self.paths.append(path)
        self._cols.append(col)
        self._cost.append(self.problem.path_distance(path))
        self._A = None
        return self.index[path]

    def keep(self, mask: np.ndarray) -> None:
        keep = np.flatnonzero(mask)
        self.paths = [self.paths[i] for i in keep]
        self._cols = [self._cols[i] for i in keep]
        self._cost = [self._cost[i] for i in keep]
        self.index = {p: i for i, p in enumerate(self.paths)}
        self._A = None

    @property
    def A(self) -> np.ndarray:
        if self._A is None:
            self._A = np.column_stack(self._cols)
            self._D = np.asarray(self._cost)
        return self._A

    @property
    def D(self) -> np.ndarray:
        self.A
        return self._D

    def __len__(self):
        return len(self.paths)


def _path_objective(A: np.ndarray, c: np.ndarray, x: np.ndarray) -> float:
    m = A @ x
    if np.any(m <= 0):
        return -np.inf
    return float(np.log(m).sum() - c @ x)


def _line_max(m: np.ndarray, Ad: np.ndarray, cd: float, t_hi: float) -> Tuple[float, bool]:
    """Maximise the concave ``phi(t) = sum log(m + t Ad) - t cd`` over ``[0, t_hi]``.

    Returns ``(t, at_boundary)``.
    """

    def dphi(t):
        mt = m + t * Ad
        if np.any(mt <= 0):
            return -np.inf, np.inf
        r = Ad / mt
        return float(r.sum() - cd), float((r * r).sum())

    if np.isfinite(t_hi):
        g_hi, _ = dphi(t_hi)
        if g_hi >= 0:
            return t_hi, True
        lo, hi = 0.0, t_hi
    else:
        lo, hi = 0.0, 1.0
        while dphi(hi)[0] > 0:
            lo, hi = hi, 2 * hi
    t = min(1.0, hi)
    for _ in range(200):
        g, curv = dphi(t)
        if g > 0:
            lo = t
        else:
            hi = t
        if hi - lo <= 1e-15 * max(hi, 1e-300) or (np.isfinite(g) and abs(g) <= 1e-15 * max(curv, 1.0)):
            break
        step = t + g / curv if np.isfinite(g) and curv > 0 else np.nan
        t = step if lo < step < hi else 0.5 * (lo + hi)
    return lo if dphi(t)[0] == -np.inf else t, False


def _restricted(A: np.ndarray, c: np.ndarray, x: np.ndarray, inner_tol: float,
                max_steps: int = 500) -> Tuple[np.ndarray, float]:
    """Maximise the path objective over the simplex on the columns of ``A``.

    Newton steps on the face of positive coordinates (plus any zero coordinate
    whose derivative exceeds the current multiplier), each followed by an exact
    line search that may land on the boundary and retire a coordinate.
    Returns the flows and the final restricted gap.
    """
    x = x.copy()
    K = x.size
    gap = np.inf
    for _ in range(max_steps):
        m = A @ x
        inv = 1.0 / m
        g = A.T @ inv - c
        mu = float(x @ g)
        gap = float(g.max() - mu)
        if gap <= inner_tol * max(1.0, abs(mu)):
            break
        free = (x > 0) | (g > mu)
        d = None
        for _retry in range(K + 1):
            F = np.flatnonzero(free)
            AF = A[:, F]
            H = -(AF.T * (inv * inv)) @ AF
            reg = 1e-13 * max(1.0, float(np.abs(np.diag(H)).max()))
            n = F.size
            kkt = np.zeros((n + 1, n + 1))
            kkt[:n, :n] = H - reg * np.eye(n)
            kkt[:n, n] = 1.0
            kkt[n, :n] = 1.0
            rhs = np.concatenate([-g[F], [0.0]])
            try:
                sol = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError:
                sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            dF = sol[:n]
            # near-singular faces give long steps; a nonzero sum would then be
            # amplified by the renormalisation below
            dF -= dF.sum() / n
            stuck = (x[F] <= 0) & (dF < 0)
            if not stuck.any():
                d = np.zeros(K)
                d[F] = dF
                break
            free[F[stuck]] = False
        if d is None or float(g @ d) <= 0:
            # Newton model gives no ascent: fall back to a pairwise move
            hi = int(np.argmax(g))
            pos = np.flatnonzero(x > 0)
            lo_i = pos[int(np.argmin(g[pos]))]
            d = np.zeros(K)
            d[hi] += 1.0
            d[lo_i] -= 1.0
            if hi == lo_i or float(g @ d) <= 0:
                break
        neg = d < 0
        t_hi = float(np.min(-x[neg] / d[neg])) if neg.any() else np.inf
        Ad = A @ d
        t, at_boundary = _line_max(m, Ad, float(c @ d), t_hi)
        if t <= 0:
            break
        x_new = x + t * d
        if at_boundary:
            hit = neg & (x + t_hi * d <= PRUNE * 10)
            x_new[hit] = 0.0
        x_new[x_new < PRUNE] = 0.0
        x_new /= x_new.sum()
        f_old = _path_objective(A, c, x)
        # gains near the optimum fall below the resolution of the objective itself
        if _path_objective(A, c, x_new) < f_old - 1e-13 * max(1.0, abs(f_old)):
            break
        x = x_new
    return x, gap


def restricted_solve(paths: Sequence[Path], problem: FlowProblem, inner_tol: float = 1e-12,
                     x0: Optional[np.ndarray] = None) -> Tuple[List[Path], np.ndarray]:
    """Optimal flows when only ``paths`` may carry flow.

    Returns the surviving paths (flow above ``1e-14``) and their flows.
    """
    if len(paths) == 0:
        raise InputError("active path set is empty")
    act = _Active(problem, paths)
    A = act.A
    if np.any(A.sum(axis=1) == 0):
        raise InputError("active paths leave some observation uncovered; objective is -inf")
    x = np.full(len(act), 1.0 / len(act)) if x0 is None else np.asarray(x0, dtype=float).copy()
    x, _ = _restricted(A, problem.lam * act.D, x, inner_tol)
    keep = x > PRUNE
    return [p for p, k in zip(act.paths, keep) if k], x[keep] / x[keep].sum()


def decompose_flow(w: np.ndarray, problem: Optional[FlowProblem] = None,
                   tol: float = CONSERVATION_TOL) -> PathDecomposition:
    """Greedy path stripping of a conserved unit arc flow.

    From the source, follow the largest-flow outgoing arc until the sink,
    subtract the bottleneck along the path, and repeat.  Path distances are
    filled in when ``problem`` is given (NaN otherwise).
    """
    w = np.array(w, dtype=float)
    T = w.shape[0] - 2
    src = w[0].sum()
    resid = w[:, 1 : T + 1].sum(axis=0) - w[1 : T + 1, :].sum(axis=1)
    if np.any(w < -tol) or abs(src - 1.0) > tol or np.any(np.abs(resid) > tol):
        raise InputError("flow is not a conserved unit flow")
    w[w < 0] = 0.0
    paths: List[Path] = []
    flows: List[float] = []
    cap = int(np.count_nonzero(w > tol)) + 1
    while w[0].sum() > tol and len(paths) < cap:
        node = 0
        seq = []
        while node != T + 1:
            nxt = int(np.argmax(w[node]))
            if w[node, nxt] <= 0:
                raise InputError("flow decomposition hit a dead end (conservation violated)")
            seq.append((node, nxt))
            node = nxt
        amount = min(w[a, b] for a, b in seq)
        for a, b in seq:
            w[a, b] -= amount
        paths.append(tuple(b for _, b in seq[:-1]))
        flows.append(amount)
    if problem is not None:
        return _with_distances(problem, paths, flows)
    return PathDecomposition(tuple(paths), np.asarray(flows), np.full(len(paths), np.nan))


def _with_distances(problem: FlowProblem, paths: Sequence[Path], flows) -> PathDecomposition:
    return PathDecomposition(tuple(paths), np.asarray(flows, dtype=float),
                             np.asarray([problem.path_distance(p) for p in paths]))


def path_derivatives(problem: FlowProblem, decomposition: PathDecomposition) -> np.ndarray:
    """Derivative of the objective with respect to each path flow."""
    w = decomposition.recompose(problem.T)
    mass = node_masses(w)
    out = np.empty(len(decomposition))
    for i, p in enumerate(decomposition.paths):
        idx = np.asarray(p) - 1
        if np.any(mass[idx] <= 0):
            raise InputError(f"zero node mass on active path {p}")
        out[i] = (1.0 / mass[idx]).sum() - problem.lam * problem.path_distance(p)
    return out


def kkt_gap(problem: FlowProblem, decomposition: PathDecomposition) -> float:
    """Best-path derivative minus the flow-weighted mean active derivative."""
    w = decomposition.recompose(problem.T)
    mass = node_masses(w)
    if np.any(mass <= 0):
        raise InputError("some observation receives no mass; objective is -inf")
    g = path_derivatives(problem, decomposition)
    x = decomposition.flows / decomposition.flows.sum()
    _, best = best_path(problem, mass)
    return max(0.0, best - float(x @ g))


def _finish(problem: FlowProblem, act: _Active, x: np.ndarray, gap: float, iters: int,
            history: List[float]) -> FlowSolution:
    decomp = _with_distances(problem, act.paths, x)
    w = decomp.recompose(problem.T)
    mass = node_masses(w)
    g = act.A.T @ (1.0 / mass) - problem.lam * act.D
    T = problem.T
    term = np.clip(w[1 : T + 1, T + 1], 0.0, None)
    term = term / term.sum()
    return FlowSolution(
        problem=problem,
        w=w,
        objective=objective(problem, w),
        node_mass=mass,
        terminal=WeightedEmpirical(term),
        mu_path=float(x @ g),
        gap=float(gap),
        decomposition=decomp,
        iterations=iters,
        history=tuple(history),
    )


def solve(problem: FlowProblem, opts: SolverOptions = SolverOptions(),
          init: Optional[Sequence[Tuple[Path, float]]] = None) -> FlowSolution:
    """Solve the reduced program; the terminal distribution is ``solution.terminal``.

    ``init`` optionally seeds the active set with ``(path, flow)`` pairs; the
    default is the uniform distribution over singleton paths, which keeps
    every node mass positive from the first iterate.
    """
    T = problem.T
    if init is None:
        act = _Active(problem, [(j,) for j in range(1, T + 1)])
        x = np.full(T, 1.0 / T)
    else:
        act = _Active(problem, [p for p, _ in init])
        x = np.asarray([f for _, f in init], dtype=float)
        x = x / x.sum()
        if np.any(act.A @ x <= 0):
            raise InputError("initial flows leave an observation without mass")

    history: List[float] = []
    gap = np.inf
    stalls = 0
    for it in range(1, opts.max_iters + 1):
        x, _ = _restricted(act.A, problem.lam * act.D, x, opts.inner_tol)
        keep = x > PRUNE
        if not keep.all():
            act.keep(keep)
            x = x[keep] / x[keep].sum()
        A = act.A
        value = _path_objective(A, problem.lam * act.D, x)
        if history and value < history[-1] - 1e-11 * max(1.0, abs(value)):
            raise InvariantViolation(
                f"objective decreased from {history[-1]!r} to {value!r} at iteration {it}")
        history.append(value)

        mass = A @ x
        g = A.T @ (1.0 / mass) - problem.lam * act.D
        mu = float(x @ g)
        path, best = best_path(problem, mass)
        gap = max(0.0, best - mu)
        if gap <= opts.gap_tol:
            sol = _finish(problem, act, x, gap, it, history)
            _check_solution(sol)
            return sol
        if path in act.index:
            stalls += 1
            if stalls > 5:
                break
            continue
        stalls = 0
        act.add(path)
        x = np.append(x, 0.0)

    best_sol = _finish(problem, act, x, gap, opts.max_iters, history)
    raise ConvergenceError(
        f"gap {gap:.3g} above tolerance {opts.gap_tol:g} after {len(history)} iterations",
        best_sol, gap)


def _check_solution(sol: FlowSolution) -> None:
    bad = check_feasible(sol.problem, sol.w)
    if bad:
        raise InvariantViolation("solution infeasible: " + "; ".join(map(str, bad[:5])))
