"""Dense two-phase tableau simplex with Bland's rule as the anti-cycling guard.

Small and certifiable rather than fast: every optimal answer carries dual
multipliers, reduced costs and the resulting duality gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

SENSES = ("<=", "=", ">=")
DEGENERATE_RUN = 50


class LPError(RuntimeError):
    pass


class InfeasibleLP(LPError):
    def __init__(self, message: str, farkas: np.ndarray, infeasibility: float):
        super().__init__(message)
        self.farkas = farkas
        self.infeasibility = infeasibility


class UnboundedLP(LPError):
    def __init__(self, message: str, ray: np.ndarray):
        super().__init__(message)
        self.ray = ray


class IterationLimit(LPError):
    def __init__(self, message: str, iterations: int, phase: int, objective: float):
        super().__init__(message)
        self.iterations = iterations
        self.phase = phase
        self.objective = objective


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """minimise (or maximise) c.x subject to A x (senses) b and lower <= x <= upper."""

    c: np.ndarray
    A: np.ndarray
    senses: Tuple[str, ...]
    b: np.ndarray
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    maximize: bool = False

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n) if n else np.zeros((len(self.senses), 0))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        lo = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).reshape(-1)
        if A.shape[0] != b.size or len(self.senses) != b.size:
            raise ValueError("constraint matrix, senses and right-hand side disagree in length")
        if lo.size != n or hi.size != n:
            raise ValueError("bounds must match the number of variables")
        if any(s not in SENSES for s in self.senses):
            raise ValueError(f"senses must be among {SENSES}")
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("inconsistent variable bounds")
        for name, val in (("c", c), ("A", A), ("b", b), ("lower", lo), ("upper", hi)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "senses", tuple(self.senses))

    @property
    def n(self) -> int:
        return self.c.size


@dataclass(frozen=True, eq=False)
class LPResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray  # one multiplier per constraint row of the original program
    reduced_costs: np.ndarray
    duality_gap: float
    iterations: int
    basis: Tuple[int, ...] = field(default=())


class _Standard:
    """min c.z s.t. M z = r, z >= 0, with x = x0 + P z."""

    def __init__(self, lp: LinearProgram):
        n = lp.n
        cols = []  # (original var, coefficient)
        x0 = np.zeros(n)
        bound_rows = []
        for j in range(n):
            lo, hi = lp.lower[j], lp.upper[j]
            if np.isfinite(lo):
                x0[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    bound_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                x0[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        nz = len(cols)
        P = np.zeros((n, nz))
        for k, (j, s) in enumerate(cols):
            P[j, k] = s
        sign = -1.0 if lp.maximize else 1.0
        cz = sign * (lp.c @ P)
        A = lp.A @ P
        rhs = lp.b - lp.A @ x0
        senses = list(lp.senses)
        for k, ub in bound_rows:
            row = np.zeros(nz)
            row[k] = 1.0
            A = np.vstack([A, row])
            rhs = np.append(rhs, ub)
            senses.append("<=")
        m_rows = A.shape[0]

        # express every inequality as <= and give it a slack column
        row_sign = np.ones(m_rows)
        for i, s in enumerate(senses):
            if s == ">=":
                row_sign[i] = -1.0
        A = A * row_sign[:, None]
        rhs = rhs * row_sign
        ineq = [i for i, s in enumerate(senses) if s != "="]
        S = np.zeros((m_rows, len(ineq)))
        for k, i in enumerate(ineq):
            S[i, k] = 1.0
        M = np.hstack([A, S])
        flip = rhs < 0
        M[flip] *= -1.0
        rhs = np.where(flip, -rhs, rhs)
        row_sign = np.where(flip, -row_sign, row_sign)

        self.lp = lp
        self.P = P
        self.x0 = x0
        self.nz = nz
        self.M = M
        self.r = rhs
        self.c = np.concatenate([cz, np.zeros(len(ineq))])
        self.row_sign = row_sign
        self.n_orig_rows = lp.A.shape[0]
        self.obj_sign = sign
        self.const = float(lp.c @ x0)


class _Tableau:
    def __init__(self, M, r, basis, tol, degenerate_run):
        self.degenerate_run = degenerate_run
        self.T = M.copy()
        self.rhs = r.copy()
        self.basis = list(basis)
        self.tol = tol

    def pivot(self, i, j):
        T, rhs = self.T, self.rhs
        piv = T[i, j]
        T[i] /= piv
        rhs[i] /= piv
        col = T[:, j].copy()
        col[i] = 0.0
        T -= np.outer(col, T[i])
        rhs -= col * rhs[i]
        self.basis[i] = j

    def reduced(self, c):
        cb = c[self.basis]
        return c - cb @ self.T, float(cb @ self.rhs)

    def run(self, c, allowed, max_iter, count, phase):
        """Dantzig pricing, handing over to Bland's rule after a run of degenerate pivots.

        Cycling needs an unbroken chain of degenerate pivots, and Bland's rule
        (lowest-index entering column, lowest-index leaving variable on ratio ties)
        cannot cycle, so the switch keeps termination guaranteed.
        """
        tol = self.tol
        stalled = 0
        while True:
            red, val = self.reduced(c)
            improving = (red < -tol) & allowed
            if not improving.any():
                return count, None
            if count >= max_iter:
                raise IterationLimit(f"simplex iteration cap {max_iter} reached in phase {phase}",
                                     count, phase, val)
            bland = stalled >= self.degenerate_run
            if bland:
                j = int(np.flatnonzero(improving)[0])
            else:
                j = int(np.argmin(np.where(improving, red, 0.0)))
            col = self.T[:, j]
            pos = np.flatnonzero(col > tol)
            if pos.size == 0:
                return count, j
            ratios = self.rhs[pos] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol * max(1.0, abs(best))]
            i = int(min(ties, key=lambda k: self.basis[k]))
            stalled = stalled + 1 if best <= tol else 0
            self.pivot(i, j)
            count += 1


def simplex_solve(lp: LinearProgram, max_iter: int = 50000, tol: float = 1e-10,
                  degenerate_run: int = DEGENERATE_RUN) -> LPResult:
    """Solve ``lp``; ``degenerate_run=0`` prices with Bland's rule throughout."""
    std = _Standard(lp)
    M, r = std.M, std.r
    m_rows, ncols = M.shape

    # start from slack columns where they are unit vectors; artificials elsewhere
    basis = [-1] * m_rows
    for k in range(std.nz, ncols):
        col = M[:, k]
        nzr = np.flatnonzero(col)
        if nzr.size == 1 and col[nzr[0]] == 1.0 and basis[nzr[0]] < 0:
            basis[nzr[0]] = k
    art_rows = [i for i in range(m_rows) if basis[i] < 0]
    n_art = len(art_rows)
    Mfull = np.hstack([M, np.zeros((m_rows, n_art))])
    for a, i in enumerate(art_rows):
        Mfull[i, ncols + a] = 1.0
        basis[i] = ncols + a
    tab = _Tableau(Mfull, r, basis, tol, degenerate_run)
    count = 0
    allowed = np.ones(ncols + n_art, dtype=bool)

    if n_art:
        c1 = np.zeros(ncols + n_art)
        c1[ncols:] = 1.0
        count, _ = tab.run(c1, allowed, max_iter, count, 1)
        infeas = float(c1[tab.basis] @ tab.rhs)
        if infeas > 1e-9 * max(1.0, float(np.abs(r).max(initial=0.0))):
            y = _duals(Mfull, tab.basis, c1)
            raise InfeasibleLP("no feasible point", _to_original(std, y, range(m_rows)), infeas)
        # drive artificials out of the basis; rows where that fails are redundant
        keep = []
        for i in range(m_rows):
            if tab.basis[i] >= ncols:
                row = tab.T[i, :ncols]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    tab.pivot(i, int(nz[0]))
                    keep.append(i)
            else:
                keep.append(i)
        tab.T = tab.T[keep][:, :ncols]
        tab.rhs = tab.rhs[keep]
        tab.basis = [tab.basis[i] for i in keep]
        rows = keep
    else:
        rows = list(range(m_rows))

    c2 = std.c
    allowed = np.ones(ncols, dtype=bool)
    count, unbounded_col = tab.run(c2, allowed, max_iter, count, 2)
    if unbounded_col is not None:
        dz = np.zeros(ncols)
        dz[unbounded_col] = 1.0
        dz[tab.basis] = -tab.T[:, unbounded_col]
        raise UnboundedLP("objective unbounded along a feasible ray", std.P @ dz[: std.nz])

    z = np.zeros(ncols)
    z[tab.basis] = tab.rhs
    z = np.maximum(z, 0.0)
    x = std.x0 + std.P @ z[: std.nz]
    Mk, rk = M[rows], r[rows]
    y = _duals(Mk, tab.basis, c2)
    red = c2 - Mk.T @ y
    gap = abs(float(c2 @ z - rk @ y))
    duals = _to_original(std, y, rows) * std.obj_sign
    return LPResult(
        x=x,
        objective=float(lp.c @ x),
        duals=duals[: std.n_orig_rows],
        reduced_costs=red,
        duality_gap=gap,
        iterations=count,
        basis=tuple(tab.basis),
    )


def _duals(M: np.ndarray, basis: Sequence[int], c: np.ndarray) -> np.ndarray:
    B = M[:, list(basis)]
    return np.linalg.solve(B.T, c[list(basis)])


def _to_original(std: _Standard, y: np.ndarray, rows) -> np.ndarray:
    out = np.zeros(std.M.shape[0])
    for k, i in enumerate(rows):
        out[i] = y[k] * std.row_sign[i]
    return out
