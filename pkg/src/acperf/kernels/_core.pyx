# cython: language_level=3
"""Compiled training-mean kernels.  Semantics mirror ``_pure`` exactly."""
import numpy as np

cimport numpy as cnp

cnp.import_array()


def train_means_without(const double[:, :, ::1] values,
                        const long long[::1] inst,
                        const long long[::1] counts,
                        const double[:, :, ::1] keys):
    cdef Py_ssize_t M = values.shape[0]
    cdef Py_ssize_t R = values.shape[2]
    cdef Py_ssize_t K = inst.shape[0]
    cdef Py_ssize_t c, k, r, j, z, n, rank
    cdef long long total = 0
    cdef double s, kr
    out = np.empty(M, dtype=np.float64)
    cdef double[::1] res = out

    for k in range(K):
        total += counts[k]

    with nogil:
        for c in range(M):
            s = 0.0
            for k in range(K):
                n = counts[k]
                if n == 0:
                    continue
                z = inst[k]
                if n >= R:
                    for r in range(R):
                        s += values[c, z, r]
                    continue
                for r in range(R):
                    kr = keys[c, k, r]
                    rank = 0
                    for j in range(R):
                        if keys[c, k, j] < kr or (keys[c, k, j] == kr and j < r):
                            rank += 1
                    if rank < n:
                        s += values[c, z, r]
            res[c] = s / total
    return out


def train_means_with(const double[:, :, ::1] values,
                     const long long[::1] inst,
                     const long long[::1] counts,
                     const long long[:, ::1] picks):
    cdef Py_ssize_t M = values.shape[0]
    cdef Py_ssize_t K = inst.shape[0]
    cdef Py_ssize_t N = picks.shape[1]
    cdef Py_ssize_t c, k, j, t, z
    cdef double s
    out = np.empty(M, dtype=np.float64)
    cdef double[::1] res = out

    with nogil:
        for c in range(M):
            s = 0.0
            t = 0
            for k in range(K):
                z = inst[k]
                for j in range(counts[k]):
                    s += values[c, z, picks[c, t]]
                    t += 1
            res[c] = s / N
    return out
