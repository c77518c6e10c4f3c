"""Time the compiled best-path kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 50,100,200,400] [--repeat 20]

Also runs a full solve with each backend so the end-to-end effect is visible.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from wpflow import _kernels_py

try:
    from wpflow import _kernels
except ImportError:
    _kernels = None


def instance(T, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(T, 3))
    dist = np.ascontiguousarray(np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=-1))
    inv_mass = np.ascontiguousarray(rng.uniform(1.0, 5.0 * T, size=T))
    allowed = np.ascontiguousarray(np.triu(np.ones((T, T), dtype=np.uint8), 1))
    return inv_mass, dist, allowed


SOLVE_SNIPPET = """
import time, numpy as np
from wpflow import BACKEND, Metric, ObservationSeries, build_problem, solve
pts = np.random.default_rng(1).normal(size=({T}, 3))
pr = build_problem(ObservationSeries.from_values(pts), Metric("l1"), {lam})
t = time.perf_counter()
sol = solve(pr)
print(BACKEND, time.perf_counter() - t, sol.iterations)
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,100,200,400")
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--solve-T", type=int, default=150)
    args = ap.parse_args()
    if _kernels is None:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")

    print(f"{'T':>5} {'cython ms':>10} {'python ms':>10} {'speedup':>8}  same")
    for T in (int(s) for s in args.sizes.split(",")):
        inv, dist, allowed = instance(T)
        for lam in (0.5, 5.0):
            a = _kernels.best_path(inv, dist, lam, allowed)
            b = _kernels_py.best_path(inv, dist, lam, allowed)
            same = list(a[0]) == list(b[0]) and abs(a[1] - b[1]) <= 1e-9 * max(1.0, abs(a[1]))
            if not same:
                sys.exit(f"backends disagree at T={T}, lam={lam}")
        lam = 0.5
        tc = min(timeit.repeat(lambda: _kernels.best_path(inv, dist, lam, allowed),
                               number=args.repeat, repeat=3)) / args.repeat
        tp = min(timeit.repeat(lambda: _kernels_py.best_path(inv, dist, lam, allowed),
                               number=args.repeat, repeat=3)) / args.repeat
        print(f"{T:>5} {tc * 1e3:>10.3f} {tp * 1e3:>10.3f} {tp / tc:>8.1f}  {same}")

    print(f"\nfull solve, T={args.solve_T}, lambda=30 (backend, seconds, iterations)")
    code = SOLVE_SNIPPET.format(T=args.solve_T, lam=30.0)
    for pure in ("0", "1"):
        env = dict(os.environ, WPFLOW_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        print("  " + out.stdout.strip())


if __name__ == "__main__":
    main()
