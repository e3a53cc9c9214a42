"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--n 50000] [--clusters 50] [--repeat 20]

Both backends are imported directly, so the comparison does not depend on
CAVREBOUND_PURE_PYTHON. Results are checked for agreement before timing.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from cavrebound._kernels import _pykernels

try:
    from cavrebound._kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _inputs(n, k, n_clusters, seed=0):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.standard_normal((n, k)))
    we = rng.standard_normal(n)
    codes = rng.integers(0, n_clusters, size=n).astype(np.intp)
    return X, we, codes


def _time(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, default=50_000)
    ap.add_argument("--k", type=int, default=30)
    ap.add_argument("--clusters", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    X, we, codes = _inputs(args.n, args.k, args.clusters)
    ff = 1.0 / (1.0 + np.linspace(0.01, 0.5, 2000))
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled extension not available; timing the fallback only")

    ref_s = _pykernels.cluster_scores(X, we, codes, args.clusters)
    ref_f = _pykernels.frontier_m3_batch(ff, ff - 1.0, -0.0989, -0.4007, 1e-9)
    print(f"cluster_scores: n={args.n} k={args.k} G={args.clusters}; frontier_m3_batch: {ff.size} points")
    print(f"{'backend':<8} {'cluster_scores':>16} {'frontier_batch':>16}")
    for name, mod in backends.items():
        s = mod.cluster_scores(X, we, codes, args.clusters)
        f = mod.frontier_m3_batch(ff, ff - 1.0, -0.0989, -0.4007, 1e-9)
        assert np.allclose(s, ref_s, rtol=1e-10, atol=1e-8), "cluster_scores disagree"
        assert np.allclose(f, ref_f, rtol=0, atol=1e-9, equal_nan=True), "frontier_m3_batch disagree"
        t_s = _time(lambda: mod.cluster_scores(X, we, codes, args.clusters), args.repeat)
        t_f = _time(lambda: mod.frontier_m3_batch(ff, ff - 1.0, -0.0989, -0.4007, 1e-9), args.repeat)
        print(f"{name:<8} {t_s * 1e3:>13.3f} ms {t_f * 1e3:>13.3f} ms")


if __name__ == "__main__":
    main()
