"""Pure numpy / Python versions of the compiled kernels."""
import math

import numpy as np


def cluster_scores(X, we, codes, n_clusters):
    X = np.asarray(X, dtype=np.float64)
    we = np.asarray(we, dtype=np.float64)
    codes = np.asarray(codes, dtype=np.intp)
    if we.shape[0] != X.shape[0] or codes.shape[0] != X.shape[0]:
        raise ValueError("X, we and codes must have the same length")
    if codes.size and (codes.min() < 0 or codes.max() >= n_clusters):
        raise ValueError("cluster code out of range")
    out = np.empty((n_clusters, X.shape[1]))
    for j in range(X.shape[1]):
        out[:, j] = np.bincount(codes, weights=we * X[:, j], minlength=n_clusters)
    return out


def _delta(fuel_factor, y, eps_f, eps_t):
    return math.pow(fuel_factor, eps_f) * math.pow(1.0 - y, eps_t) - 1.0


def frontier_m3_batch(fuel_factors, targets, eps_f, eps_t, tol, max_iter=200):
    res = np.empty(len(fuel_factors))
    for idx, (ff, tgt) in enumerate(zip(fuel_factors, targets)):
        g = _delta(ff, 0.0, eps_f, eps_t) - tgt
        if g > tol:
            res[idx] = math.nan
            continue
        if abs(g) < tol:
            res[idx] = 0.0
            continue
        lo, hi, mid = 0.0, 1.0, 0.5
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            g = _delta(ff, mid, eps_f, eps_t) - tgt
            if abs(g) < tol:
                break
            if g > 0.0:
                hi = mid
            else:
                lo = mid
        res[idx] = mid
    return res
