# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Mirrors ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, NAN

cnp.import_array()


def cluster_scores(const double[:, ::1] X, const double[::1] we,
                   const cnp.intp_t[::1] codes, Py_ssize_t n_clusters):
    """Per-cluster score sums S[g] = sum_{i in g} we[i] * X[i].

    Rows are visited in order, so the reduction order is fixed.
    """
    cdef Py_ssize_t n = X.shape[0], k = X.shape[1]
    cdef Py_ssize_t i, j, g
    cdef double e
    if we.shape[0] != n or codes.shape[0] != n:
        raise ValueError("X, we and codes must have the same length")
    out = np.zeros((n_clusters, k), dtype=np.float64)
    cdef double[:, ::1] S = out
    for i in range(n):
        g = codes[i]
        if g < 0 or g >= n_clusters:
            raise ValueError("cluster code out of range")
        e = we[i]
        for j in range(k):
            S[g, j] += e * X[i, j]
    return out


cdef inline double _delta(double fuel_factor, double y, double eps_f, double eps_t) nogil:
    return pow(fuel_factor, eps_f) * pow(1.0 - y, eps_t) - 1.0


def frontier_m3_batch(const double[::1] fuel_factors, const double[::1] targets,
                      double eps_f, double eps_t, double tol, int max_iter=200):
    """Bisection for Y in [0, 1) solving delta(Y) = target, one per entry.

    NaN marks entries already above target at Y = 0.
    """
    cdef Py_ssize_t m = fuel_factors.shape[0], idx
    cdef double lo, hi, mid, g, ff, tgt
    cdef int it
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] res = out
    for idx in range(m):
        ff = fuel_factors[idx]
        tgt = targets[idx]
        g = _delta(ff, 0.0, eps_f, eps_t) - tgt
        if g > tol:
            res[idx] = NAN
            continue
        if fabs(g) < tol:
            res[idx] = 0.0
            continue
        lo = 0.0
        hi = 1.0
        mid = 0.5
        for it in range(max_iter):
            mid = 0.5 * (lo + hi)
            g = _delta(ff, mid, eps_f, eps_t) - tgt
            if fabs(g) < tol:
                break
            if g > 0.0:
                hi = mid
            else:
                lo = mid
        res[idx] = mid
    return out
