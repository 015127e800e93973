"""Hot numeric kernels with a JIT backend and a pure-numpy fallback.

The backend is chosen once at import time. Set GEOSHIFT_NUMBA=0 (or false/
no/off) to force the numpy path, e.g. for debugging or on hosts where numba
is unavailable; anything else selects the JIT path when numba imports.
`BACKEND` records which one is live.
"""

from __future__ import annotations

import os

_FALSY = {"0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("GEOSHIFT_NUMBA", "1").strip().lower() not in _FALSY


BACKEND = "numpy"
if _numba_requested():
    try:
        from geoshift.kernels import _numba as _impl

        BACKEND = "numba"
    except ImportError:
        from geoshift.kernels import _numpy as _impl
else:
    from geoshift.kernels import _numpy as _impl

kde_evaluate = _impl.kde_evaluate
nearest_centroids = _impl.nearest_centroids
centroid_sums = _impl.centroid_sums
refine_sweep = _impl.refine_sweep
band_means = _impl.band_means
band_moments = _impl.band_moments
softmax_probabilities = _impl.softmax_probabilities
softmax_loss_grad = _impl.softmax_loss_grad
argmax_rows = _impl.argmax_rows
count_equal = _impl.count_equal


def set_thread_count(n: int) -> int:
    """Cap worker threads for the JIT backend; no-op on the numpy path.

    Returns the thread count actually in effect. Kernels are written so the
    result is identical for any count.
    """
    if BACKEND != "numba":
        return 1
    import numba

    capped = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(capped)
    return capped
