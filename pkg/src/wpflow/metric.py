"""Ground metrics on observation space and cached pairwise distance matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

KINDS = ("l1", "l2", "linf", "adjusted")


class InputError(ValueError):
    """Raised for malformed numerical input (bad shapes, negative flows, ...)."""


@dataclass(frozen=True)
class Metric:
    """A norm-induced metric, or a norm metric with a fixed movement penalty.

    ``Metric("adjusted", base=Metric("l2"), delta0=0.1)`` charges ``delta0``
    on top of the base distance for every pair of distinct points.
    """

    kind: str = "l2"
    base: Optional["Metric"] = None
    delta0: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown metric kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "adjusted":
            if self.base is None or self.base.kind == "adjusted":
                raise InputError("adjusted metric needs a plain norm metric as base")
            if not self.delta0 > 0:
                raise InputError("adjusted metric needs delta0 > 0")

    @classmethod
    def parse(cls, name: str, delta0: float = 0.0) -> "Metric":
        """Build from a CLI-style name; a positive ``delta0`` wraps it in the adjustment."""
        base = cls(name.lower())
        if delta0 and delta0 > 0:
            return cls("adjusted", base=base, delta0=float(delta0))
        return base

    @property
    def label(self) -> str:
        if self.kind == "adjusted":
            return f"{self.base.label}+{self.delta0:g}"
        return self.kind


def _as_rows(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise InputError("points must be scalars or vectors")
    return arr


def _norm(diff: np.ndarray, kind: str) -> np.ndarray:
    if kind == "l1":
        return np.abs(diff).sum(axis=-1)
    if kind == "l2":
        return np.sqrt((diff * diff).sum(axis=-1))
    return np.abs(diff).max(axis=-1)


def distance(a, b, metric: Metric) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.ndim != 1 or a.shape != b.shape or a.size == 0:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if metric.kind == "adjusted":
        if np.array_equal(a, b):
            return 0.0
        return float(_norm(a - b, metric.base.kind)) + metric.delta0
    return float(_norm(a - b, metric.kind))


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric matrix of distances between observations, zero on the diagonal."""

    d: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __getitem__(self, ij):
        return self.d[ij]


def pairwise_distances(points: Sequence, metric: Metric) -> DistanceMatrix:
    """All pairwise distances between ``points`` (shape ``(n,)`` or ``(n, m)``)."""
    if len(points) == 0:
        raise InputError("empty point sequence")
    try:
        pts = _as_rows(points)
    except ValueError as exc:  # ragged input
        raise InputError(f"ragged point dimensions: {exc}") from None
    diff = pts[:, None, :] - pts[None, :, :]
    if metric.kind == "adjusted":
        d = _norm(diff, metric.base.kind)
        same = np.all(diff == 0.0, axis=-1)
        d = np.where(same, 0.0, d + metric.delta0)
    else:
        d = _norm(diff, metric.kind)
    # exact symmetry and zero diagonal regardless of rounding
    d = np.maximum(d, d.T)
    np.fill_diagonal(d, 0.0)
    d.setflags(write=False)
    return DistanceMatrix(d)
