import os
import subprocess
import sys

import numpy as np
import pytest

from wpflow import BACKEND, kernels
from wpflow import _kernels_py

try:
    from wpflow import _kernels
except ImportError:
    _kernels = None

BACKENDS = [pytest.param(_kernels_py.best_path, id="python")]
if _kernels is not None:
    BACKENDS.append(pytest.param(_kernels.best_path, id="cython"))


def brute_force(inv, dist, lam, allowed):
    T = inv.size
    best, arg = -np.inf, None
    for mask in range(1, 1 << T):
        p = [j for j in range(T) if mask >> j & 1]
        if not all(allowed[a, b] for a, b in zip(p, p[1:])):
            continue
        v = inv[p].sum() - lam * sum(dist[a, b] for a, b in zip(p, p[1:]))
        if v > best + 1e-12:
            best, arg = v, p
    return arg, best


def instance(rng, T, forbid=0.0):
    pts = rng.normal(size=(T, 2))
    dist = np.ascontiguousarray(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)))
    inv = rng.uniform(0.5, 3.0, size=T)
    allowed = np.triu(np.ones((T, T), dtype=np.uint8), 1)
    allowed &= (rng.random((T, T)) >= forbid).astype(np.uint8)
    return inv, dist, np.ascontiguousarray(allowed)


@pytest.mark.parametrize("kernel", BACKENDS)
def test_best_path_matches_enumeration(kernel):
    rng = np.random.default_rng(5)
    for _ in range(60):
        T = int(rng.integers(1, 8))
        inv, dist, allowed = instance(rng, T, forbid=0.3)
        lam = float(rng.choice([0.1, 1.0, 5.0]))
        path, value = kernel(inv, dist, lam, allowed)
        _, best = brute_force(inv, dist, lam, allowed)
        assert value == pytest.approx(best, abs=1e-12)
        p = list(path)
        assert p == sorted(p) and all(allowed[a, b] for a, b in zip(p, p[1:]))


@pytest.mark.skipif(_kernels is None, reason="compiled extension not built")
def test_backends_agree_exactly():
    rng = np.random.default_rng(11)
    for T in (2, 10, 60, 150):
        inv, dist, allowed = instance(rng, T, forbid=0.1)
        for lam in (0.0, 0.3, 3.0, 1e6):
            a = _kernels.best_path(inv, dist, lam, allowed)
            b = _kernels_py.best_path(inv, dist, lam, allowed)
            assert list(a[0]) == list(b[0])
            assert a[1] == pytest.approx(b[1], rel=1e-14)


@pytest.mark.parametrize("kernel", BACKENDS)
def test_ties_prefer_sink_and_smallest_index(kernel):
    inv = np.array([1.0, 1.0, 1.0])
    dist = np.zeros((3, 3))
    allowed = np.triu(np.ones((3, 3), dtype=np.uint8), 1)
    path, value = kernel(inv, dist, 1.0, allowed)
    assert list(path) == [0, 1, 2] and value == 3.0
    # a continuation worth exactly zero is not taken
    dist = np.ones((3, 3))
    path, value = kernel(inv, dist, 1.0, allowed)
    assert list(path) == [0] and value == 1.0


def test_environment_forces_fallback():
    code = "from wpflow import BACKEND; print(BACKEND)"
    env = dict(os.environ, WPFLOW_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert BACKEND in ("cython", "python")
    assert kernels.BACKEND == BACKEND
