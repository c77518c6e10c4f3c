"""Structural analysis of solved flows: components, mass bounds, uniqueness and age checks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .metric import DistanceMatrix, Metric
from .model import FlowSolution, ObservationSeries, build_problem
from .solver import SolverOptions, solve

SUPPORT_TOL = 1e-10
BOUND_SLACK = 1e-7
MAX_T = {"any": 9, "increasing": 16, "all": 7}


@dataclass(frozen=True)
class Component:
    nodes: Tuple[int, ...]
    mass: float
    d_max: float
    paths: Tuple[int, ...]

    def __len__(self):
        return len(self.nodes)


def components(solution: FlowSolution, threshold: float = SUPPORT_TOL) -> List[Component]:
    """Connected pieces of the undirected support graph, ordered by smallest node."""
    T = solution.problem.T
    w = solution.w
    parent = list(range(T + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    inner = w[1 : T + 1, 1 : T + 1]
    for i, j in zip(*np.nonzero(inner > threshold)):
        ra, rb = find(int(i) + 1), find(int(j) + 1)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    support = [i for i in range(1, T + 1) if solution.node_mass[i - 1] > threshold]
    groups = {}
    for i in support:
        groups.setdefault(find(i), []).append(i)

    dec = solution.decomposition
    out = []
    for root in sorted(groups):
        nodes = tuple(groups[root])
        members = set(nodes)
        idx = tuple(k for k, (p, f) in enumerate(zip(dec.paths, dec.flows))
                    if f > threshold and p[0] in members)
        d_max = max((float(dec.path_distance[k]) for k in idx), default=0.0)
        mass = float(sum(w[0, i] for i in nodes))
        out.append(Component(nodes, mass, d_max, idx))
    return out


@dataclass(frozen=True)
class BoundsCheck:
    lower: float
    upper: float
    holds: bool


def component_bounds_check(component: Component, mu_path: float, lam: float) -> BoundsCheck:
    """Mass of a component lies between |C|/(mu + lam*d_max) and |C|/mu."""
    n = len(component)
    lower = n / (mu_path + lam * component.d_max)
    upper = n / mu_path
    holds = lower - BOUND_SLACK <= component.mass <= upper + BOUND_SLACK
    return BoundsCheck(lower, upper, holds)


@dataclass(frozen=True)
class SubsetSumReport:
    status: str  # "pass", "fail" or "unsupported"
    sequence: Optional[Tuple[int, ...]] = None
    witness: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def _add_value(vals, sums, masks, v, tol):
    """Append ``v`` to the multiset; return a colliding pair or the grown sum table."""
    bit = 1 << len(vals)
    shifted = sums + v
    order = np.argsort(sums, kind="stable")
    s_sorted = sums[order]
    pos = np.minimum(np.searchsorted(s_sorted, shifted - tol), len(s_sorted) - 1)
    close = np.abs(s_sorted[pos] - shifted) <= tol
    if close.any():
        b = int(np.argmax(close))
        a = int(order[pos[b]])
        nv = list(vals) + [v]
        ma, mb = int(masks[a]), int(masks[b]) | bit
        common = ma & mb
        left = tuple(nv[k] for k in range(len(nv)) if (ma & ~common) >> k & 1)
        right = tuple(nv[k] for k in range(len(nv)) if (mb & ~common) >> k & 1)
        return (left, right), None, None
    return None, np.concatenate([sums, shifted]), np.concatenate([masks, masks | bit])


MODES = ("any", "increasing", "all")


def unique_subset_sums_check(dist: DistanceMatrix, tol: float = 1e-9, mode: str = "any",
                             max_T: Optional[int] = None) -> SubsetSumReport:
    """Look for two distinct sub-multisets of path distances with equal sums.

    ``mode="any"`` walks every sequence of distinct nodes and tests the consecutive
    nonzero distances along it.  This is the uniqueness hypothesis for the
    terminal distribution, since a difference of two optimal flows may run along
    arcs in either direction.  ``mode="increasing"`` keeps only time-ordered
    sequences and stays cheap up to T = 16.  ``mode="all"`` tests the set of all
    nonzero pairwise distances at once, the stronger condition that pins down the
    whole flow; it typically fails for collinear data.

    Sub-multisets are compared by position, so a repeated distance counts as a
    collision.  Returns the first colliding pair found, or an explicit
    ``unsupported`` status when T exceeds the exhaustive limit.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    d = dist.d
    T = dist.n
    if max_T is None:
        max_T = MAX_T[mode]
    if T > max_T:
        return SubsetSumReport("unsupported")
    empty = (np.zeros(1), np.zeros(1, dtype=np.int64))

    if mode == "all":
        vals, (sums, masks) = [], empty
        for i in range(T):
            for j in range(i + 1, T):
                v = float(d[i, j])
                if v <= 0.0:
                    continue
                hit, sums, masks = _add_value(vals, sums, masks, v, tol)
                if hit:
                    return SubsetSumReport("fail", None, hit)
                vals.append(v)
        return SubsetSumReport("pass")

    def extend(seq, vals, sums, masks):
        last = seq[-1]
        nexts = range(last + 1, T) if mode == "increasing" else (k for k in range(T) if k not in seq)
        for nxt in nexts:
            v = float(d[last, nxt])
            if v <= 0.0:
                # identical observations contribute nothing to any path cost
                found = extend(seq + (nxt,), vals, sums, masks)
            else:
                hit, s2, m2 = _add_value(vals, sums, masks, v, tol)
                if hit:
                    return seq + (nxt,), hit
                found = extend(seq + (nxt,), vals + [v], s2, m2)
            if found:
                return found
        return None

    for start in range(T):
        found = extend((start,), [], *empty)
        if found:
            seq, witness = found
            return SubsetSumReport("fail", tuple(i + 1 for i in seq), witness)
    return SubsetSumReport("pass")


@dataclass(frozen=True)
class SwapReport:
    applicable: bool
    weight_before: float
    weight_after: float

    @property
    def holds(self) -> bool:
        return (not self.applicable) or self.weight_after <= self.weight_before + BOUND_SLACK


def _component_of(comps: Sequence[Component], node: int) -> int:
    for k, c in enumerate(comps):
        if node in c.nodes:
            return k
    return -1


def swap_monotonicity_test(series: ObservationSeries, metric: Metric, lam: float, i0: int,
                           opts: SolverOptions = SolverOptions()) -> SwapReport:
    """Move observation i0 one step earlier and compare its terminal weight.

    Only meaningful when positions i0-1 and i0 fall in different components of
    the original solution; otherwise the report is marked inapplicable.
    """
    if not 2 <= i0 <= series.T:
        raise ValueError(f"swap position {i0} outside 2..{series.T}")
    base = solve(build_problem(series, metric, lam), opts)
    comps = components(base)
    a, b = _component_of(comps, i0 - 1), _component_of(comps, i0)
    before = float(base.terminal.weights[i0 - 1])
    if a == b:
        return SwapReport(False, before, before)
    moved = solve(build_problem(series.swapped(i0), metric, lam), opts)
    return SwapReport(True, before, float(moved.terminal.weights[i0 - 2]))
