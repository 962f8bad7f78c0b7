"""Kernel selection.

The compiled extension is used when it imports; otherwise the pure-Python
twin.  Set ``BOOLPERC_PURE=1`` to force the fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("BOOLPERC_PURE"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels

union_find_labels = _pykernels.union_find_labels


def grid_labels(centers, radii, cell, impl=None):
    impl = impl or _impl
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    if centers.ndim == 1:
        centers = centers.reshape(-1, 1)
    try:
        return impl.grid_labels(centers, radii, float(cell))
    except OverflowError:
        return _pykernels.grid_labels(centers, radii, float(cell))


def greedy_net(probes, sep, impl=None):
    impl = impl or _impl
    probes = np.ascontiguousarray(probes, dtype=np.float64)
    if probes.ndim == 1:
        probes = probes.reshape(-1, 1)
    try:
        return impl.greedy_net(probes, float(sep))
    except OverflowError:
        return _pykernels.greedy_net(probes, float(sep))
