# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled best-path dynamic program over the observation DAG."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def best_path(const double[::1] inv_mass, const double[:, ::1] dist, double lam,
              const unsigned char[:, ::1] allowed):
    """Return ``(path, value)`` with 0-based node indices; see ``_kernels_py.best_path``."""
    cdef Py_ssize_t T = inv_mass.shape[0]
    cdef Py_ssize_t j, k, start
    cdef double inner, cand, best
    value_arr = np.empty(T, dtype=np.float64)
    nxt_arr = np.empty(T, dtype=np.intp)
    cdef double[::1] value = value_arr
    cdef Py_ssize_t[::1] nxt = nxt_arr

    for j in range(T - 1, -1, -1):
        inner = 0.0
        nxt[j] = -1
        for k in range(j + 1, T):
            if allowed[j, k]:
                cand = value[k] - lam * dist[j, k]
                if cand > inner:
                    inner = cand
                    nxt[j] = k
        value[j] = inv_mass[j] + inner

    start = 0
    best = value[0]
    for j in range(1, T):
        if value[j] > best:
            best = value[j]
            start = j

    path = []
    j = start
    while j >= 0:
        path.append(j)
        j = nxt[j]
    return path, best
