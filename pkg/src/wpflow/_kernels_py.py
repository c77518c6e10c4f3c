"""Pure-numpy fallback for the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def best_path(inv_mass, dist, lam, allowed):
    """Maximise ``sum(inv_mass[path]) - lam * D(path)`` over increasing paths.

    ``allowed`` is a ``(T, T)`` 0/1 array of usable observation arcs.  Paths
    use 0-based indices.  A node's successor is the sink unless some allowed
    continuation has strictly positive value; ties go to the smallest index.
    """
    inv_mass = np.asarray(inv_mass, dtype=float)
    T = inv_mass.shape[0]
    value = np.empty(T)
    nxt = np.full(T, -1, dtype=np.intp)
    for j in range(T - 1, -1, -1):
        inner = 0.0
        if j + 1 < T:
            cand = value[j + 1 :] - lam * dist[j, j + 1 :]
            cand = np.where(allowed[j, j + 1 :] != 0, cand, -np.inf)
            k = int(np.argmax(cand))
            if cand[k] > 0.0:
                inner = float(cand[k])
                nxt[j] = j + 1 + k
        value[j] = inv_mass[j] + inner
    start = int(np.argmax(value))
    path = []
    j = start
    while j >= 0:
        path.append(j)
        j = int(nxt[j])
    return path, float(value[start])
