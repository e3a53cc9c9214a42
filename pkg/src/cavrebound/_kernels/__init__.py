"""Hot loops, compiled when the Cython extension is available.

Set ``CAVREBOUND_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("CAVREBOUND_PURE_PYTHON", "") != "1":
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

cluster_scores = _impl.cluster_scores
frontier_m3_batch = _impl.frontier_m3_batch

__all__ = ["BACKEND", "cluster_scores", "frontier_m3_batch", "_pykernels"]
