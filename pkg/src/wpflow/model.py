"""Observation series, the reduced network-flow program and its solutions.

Node numbering follows the flow network directly: 0 is the source, 1..T are
the observations in time order and T+1 is the sink.  Arc flows are held in a
dense ``(T+2, T+2)`` array whose only admissible entries are the upper
triangle minus ``(0, T+1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .metric import DistanceMatrix, InputError, Metric, pairwise_distances

Arc = Tuple[int, int]
Path = Tuple[int, ...]

CONSERVATION_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ObservationSeries:
    """Observations in time order with nondecreasing period labels starting at 1."""

    points: np.ndarray
    periods: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError("need at least one observation of dimension >= 1")
        per = np.asarray(self.periods, dtype=int).reshape(-1)
        if per.shape[0] != pts.shape[0]:
            raise InputError("one period label per observation is required")
        steps = np.diff(per)
        if per[0] != 1 or np.any(steps < 0) or np.any(steps > 1):
            raise InputError("period labels must start at 1 and increase by 0 or 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "periods", per)

    @classmethod
    def from_values(cls, values, periods: Optional[Sequence[int]] = None) -> "ObservationSeries":
        pts = np.asarray(values, dtype=float)
        n = pts.shape[0] if pts.ndim else 1
        if periods is None:
            periods = np.arange(1, n + 1)
        return cls(pts, np.asarray(periods))

    @property
    def T(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def grouped(self) -> bool:
        return bool(np.any(np.diff(self.periods) == 0))

    def __len__(self):
        return self.T

    def prefix(self, t: int) -> "ObservationSeries":
        """The first ``t`` observations (a fresh object; never a view into later data)."""
        if not 1 <= t <= self.T:
            raise InputError(f"prefix length {t} outside 1..{self.T}")
        return ObservationSeries(self.points[:t].copy(), self.periods[:t].copy())

    def reversed(self) -> "ObservationSeries":
        per = self.periods[::-1]
        return ObservationSeries(self.points[::-1].copy(), per.max() + 1 - per)

    def swapped(self, i0: int) -> "ObservationSeries":
        """Exchange observations at 1-based positions ``i0 - 1`` and ``i0``."""
        pts = self.points.copy()
        pts[[i0 - 2, i0 - 1]] = pts[[i0 - 1, i0 - 2]]
        return ObservationSeries(pts, self.periods.copy())


@dataclass(frozen=True, eq=False)
class WeightedEmpirical:
    """Probabilities attached to the historical observations 1..T."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size < 1:
            raise InputError("empty weight vector")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InputError(f"weights must be nonnegative and sum to 1 (sum={w.sum()!r})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def T(self) -> int:
        return self.weights.size

    def support(self, threshold: float = 1e-10) -> List[int]:
        """1-based indices carrying more than ``threshold`` probability."""
        return [int(i) + 1 for i in np.flatnonzero(self.weights > threshold)]

    def __len__(self):
        return self.T

    def __getitem__(self, i):
        return self.weights[i]


@dataclass(frozen=True, eq=False)
class FlowProblem:
    """An instance of the reduced network-flow program."""

    T: int
    dist: DistanceMatrix
    lam: float
    forbidden: FrozenSet[Arc] = frozenset()
    periods: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.T < 1 or self.dist.n != self.T:
            raise InputError("distance matrix does not match the observation count")
        if not self.lam >= 0:
            raise InputError("lambda must be nonnegative")
        mask = np.triu(np.ones((self.T, self.T), dtype=bool), k=1)
        for i, j in self.forbidden:
            mask[i - 1, j - 1] = False
        mask.setflags(write=False)
        object.__setattr__(self, "_next_mask", mask)

    @property
    def allowed(self) -> np.ndarray:
        """``allowed[i, j]`` (0-based) is True when observation arc (i+1, j+1) is free."""
        return self._next_mask

    def arcs(self) -> List[Arc]:
        """Every free arc, source and sink arcs included."""
        T = self.T
        out = [(0, j) for j in range(1, T + 1)]
        ii, jj = np.nonzero(self._next_mask)
        out += [(int(i) + 1, int(j) + 1) for i, j in zip(ii, jj)]
        out += [(i, T + 1) for i in range(1, T + 1)]
        return out

    @property
    def n_arcs(self) -> int:
        return 2 * self.T + int(self._next_mask.sum())

    def arc_mask(self) -> np.ndarray:
        """Boolean ``(T+2, T+2)`` mask of free arcs."""
        T = self.T
        m = np.zeros((T + 2, T + 2), dtype=bool)
        m[0, 1 : T + 1] = True
        m[1 : T + 1, T + 1] = True
        m[1 : T + 1, 1 : T + 1] = self._next_mask
        return m

    def path_distance(self, path: Sequence[int]) -> float:
        d = self.dist.d
        return float(sum(d[a - 1, b - 1] for a, b in zip(path[:-1], path[1:])))

    def path_allowed(self, path: Sequence[int]) -> bool:
        if not path or path[0] < 1 or path[-1] > self.T:
            return False
        return all(a < b and self._next_mask[a - 1, b - 1] for a, b in zip(path[:-1], path[1:]))


def build_problem(series: ObservationSeries, metric: Metric, lam: float,
                  grouped: bool = False) -> FlowProblem:
    dist = pairwise_distances(series.points, metric)
    forbidden = frozenset()
    if grouped:
        s = series.periods
        forbidden = frozenset(
            (i + 1, j + 1)
            for i in range(series.T)
            for j in range(i + 1, series.T)
            if s[i] == s[j]
        )
    return FlowProblem(series.T, dist, float(lam), forbidden, series.periods.copy())


def node_masses(w: np.ndarray) -> np.ndarray:
    """Inflow into each observation node, i.e. the probability it receives in its own period."""
    T = w.shape[0] - 2
    return w[: T + 1, 1 : T + 1].sum(axis=0)


def objective(problem: FlowProblem, w: np.ndarray) -> float:
    """Log-likelihood minus the transport penalty; ``-inf`` when any observation gets no mass."""
    w = np.asarray(w, dtype=float)
    T = problem.T
    if w.shape != (T + 2, T + 2):
        raise InputError(f"flow array must have shape {(T + 2, T + 2)}, got {w.shape}")
    if np.any(w < 0):
        raise InputError("negative arc flow")
    mass = node_masses(w)
    if np.any(mass <= 0):
        return -np.inf
    transport = float((problem.dist.d * w[1 : T + 1, 1 : T + 1]).sum())
    return float(np.log(mass).sum()) - problem.lam * transport


@dataclass(frozen=True)
class Violation:
    kind: str
    where: Tuple[int, ...]
    amount: float

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.amount:.3g}"


def check_feasible(problem: FlowProblem, w: np.ndarray, tol: float = CONSERVATION_TOL) -> List[Violation]:
    """List every constraint of the reduced program that ``w`` violates (empty if feasible)."""
    w = np.asarray(w, dtype=float)
    T = problem.T
    out: List[Violation] = []
    if w.shape != (T + 2, T + 2):
        return [Violation("shape", tuple(w.shape), float("nan"))]
    for i, j in zip(*np.nonzero(w < -tol)):
        out.append(Violation("negative", (int(i), int(j)), float(w[i, j])))
    src = w[0].sum()
    if abs(src - 1.0) > tol:
        out.append(Violation("source_mass", (0,), float(1.0 - src)))
    resid = w[:, 1 : T + 1].sum(axis=0) - w[1 : T + 1, :].sum(axis=1)
    for j in np.flatnonzero(np.abs(resid) > tol):
        out.append(Violation("conservation", (int(j) + 1,), float(resid[j])))
    free = problem.arc_mask()
    forbidden = np.zeros_like(free)
    for i, j in problem.forbidden:
        forbidden[i, j] = True
    off = (~free) & (np.abs(w) > tol)
    for i, j in zip(*np.nonzero(off)):
        kind = "forbidden" if forbidden[i, j] else "non_arc"
        out.append(Violation(kind, (int(i), int(j)), float(w[i, j])))
    return out


@dataclass(frozen=True, eq=False)
class PathDecomposition:
    """Source-to-sink paths (1-based, strictly increasing, endpoints implicit) with flows."""

    paths: Tuple[Path, ...]
    flows: np.ndarray
    path_distance: np.ndarray

    def __len__(self):
        return len(self.paths)

    def recompose(self, T: int) -> np.ndarray:
        w = np.zeros((T + 2, T + 2))
        for p, x in zip(self.paths, self.flows):
            w[0, p[0]] += x
            for a, b in zip(p[:-1], p[1:]):
                w[a, b] += x
            w[p[-1], T + 1] += x
        return w


@dataclass(frozen=True, eq=False)
class FlowSolution:
    """A solved flow problem: arc flows, terminal distribution and optimality certificate."""

    problem: FlowProblem
    w: np.ndarray
    objective: float
    node_mass: np.ndarray
    terminal: WeightedEmpirical
    mu_path: float
    gap: float
    decomposition: PathDecomposition
    iterations: int = 0
    history: Tuple[float, ...] = field(default=())

    @property
    def source(self) -> np.ndarray:
        """Initial-period distribution ``w(0, j)``."""
        return self.w[0, 1 : self.problem.T + 1].copy()
