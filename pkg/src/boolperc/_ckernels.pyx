# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: grid-hashed ball clustering and greedy separated nets."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline Py_ssize_t _find(Py_ssize_t* parent, Py_ssize_t a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


cdef inline void _unite(Py_ssize_t* parent, Py_ssize_t* size, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a == b:
        return
    if size[a] < size[b]:
        a, b = b, a
    parent[b] = a
    size[a] += size[b]


cdef inline double _dist2(const double* x, Py_ssize_t i, Py_ssize_t j, Py_ssize_t d) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t k
    for k in range(d):
        t = x[i * d + k] - x[j * d + k]
        acc += t * t
    return acc


cdef inline Py_ssize_t _lower_bound(const long long* keys, Py_ssize_t n, long long key) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo


def _linear_keys(double[:, ::1] pts, double cell, int reach):
    """Cell keys plus the first key of every row of the (2*reach+1)^d neighbourhood.

    The last axis has stride 1, so each row is the key range [off, off + 2*reach].
    """
    arr = np.asarray(pts)
    n, d = arr.shape
    cc = np.floor(arr / cell).astype(np.int64)
    lo = cc.min(axis=0) - reach
    ext = cc.max(axis=0) - lo + reach + 1
    if float(np.prod(ext.astype(np.float64))) > 2.0 ** 62:
        raise OverflowError("grid too large for linear keys")
    strides = np.ones(d, dtype=np.int64)
    for k in range(d - 2, -1, -1):
        strides[k] = strides[k + 1] * ext[k + 1]
    keys = ((cc - lo) * strides).sum(axis=1)
    span = np.arange(-reach, reach + 1, dtype=np.int64)
    grids = np.meshgrid(*([span] * (d - 1) + [np.array([-reach])]), indexing="ij")
    offsets = sum(g.ravel() * strides[k] for k, g in enumerate(grids))
    return keys.astype(np.longlong), np.ascontiguousarray(offsets, dtype=np.longlong)


def _cell_starts(sorted_keys, offsets, Py_ssize_t n):
    """Dense table: rows of sorted_keys with key c start at starts[c], or None if the grid is huge."""
    top = int(sorted_keys[-1]) + int(offsets.max()) + 8
    low = int(sorted_keys[0]) + int(offsets.min())
    if low < 0 or top > max(8 * n, 1 << 22):
        return None
    return np.searchsorted(sorted_keys, np.arange(top + 1, dtype=np.longlong)).astype(np.intp)


def _canonical(Py_ssize_t[::1] parent):
    cdef Py_ssize_t n = parent.shape[0], i, r
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] lab = out
    first = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] fst = first
    for i in range(n):
        r = _find(&parent[0], i)
        if fst[r] < 0:
            fst[r] = i
        lab[i] = fst[r]
    return out


def grid_labels(double[:, ::1] centers, double[::1] radii, double cell):
    """Component labels (smallest member index) of the ball-intersection graph.

    Balls with radius <= cell are bucketed on a grid of edge ``cell`` and only
    compared within two cells of each other; larger balls go on an oversize
    list compared against everything.
    """
    cdef Py_ssize_t n = centers.shape[0], d = centers.shape[1]
    parent_arr = np.arange(n, dtype=np.intp)
    size_arr = np.ones(n, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t[::1] size = size_arr
    if n == 0:
        return np.empty(0, dtype=np.int64)
    keys_np, offs_np = _linear_keys(centers, cell, 2)
    order_np = np.argsort(keys_np, kind="stable").astype(np.intp)
    sorted_np = np.ascontiguousarray(keys_np[order_np])
    big_np = np.flatnonzero(np.asarray(radii) > cell).astype(np.intp)
    small_mask_np = (np.asarray(radii) <= cell).astype(np.uint8)

    starts_np = _cell_starts(sorted_np, offs_np, n)
    cdef bint dense = starts_np is not None
    if not dense:
        starts_np = np.zeros(1, dtype=np.intp)

    cdef const long long[::1] keys = keys_np
    cdef const long long[::1] offs = offs_np
    cdef const long long[::1] skeys = sorted_np
    cdef Py_ssize_t[::1] order = order_np
    cdef Py_ssize_t[::1] big = big_np
    cdef Py_ssize_t[::1] starts = starts_np
    cdef unsigned char[::1] small = small_mask_np
    cdef Py_ssize_t i, j, o, p, stop, b, nb = big.shape[0], no = offs.shape[0]
    cdef long long key
    cdef double rr

    with nogil:
        for i in range(n):
            if not small[i]:
                continue
            for o in range(no):
                key = keys[i] + offs[o]
                if dense:
                    p = starts[key]
                    stop = starts[key + 5]
                else:
                    p = _lower_bound(&skeys[0], n, key)
                    stop = n
                while p < stop and skeys[p] <= key + 4:
                    j = order[p]
                    p += 1
                    if j <= i or not small[j]:
                        continue
                    rr = radii[i] + radii[j]
                    if _dist2(&centers[0, 0], i, j, d) < rr * rr:
                        _unite(&parent[0], &size[0], i, j)
        for b in range(nb):
            i = big[b]
            for j in range(n):
                if j == i or (not small[j] and j < i):
                    continue
                rr = radii[i] + radii[j]
                if _dist2(&centers[0, 0], i, j, d) < rr * rr:
                    _unite(&parent[0], &size[0], i, j)
    return _canonical(parent)


def greedy_net(double[:, ::1] probes, double sep):
    """Indices of a greedy sep-separated subset, scanning probes in order.

    A probe joins the net when every current net point is at distance >= sep.
    """
    cdef Py_ssize_t n = probes.shape[0], d = probes.shape[1]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    keys_np, offs_np = _linear_keys(probes, sep, 1)
    order_np = np.argsort(keys_np, kind="stable").astype(np.intp)
    sorted_np = np.ascontiguousarray(keys_np[order_np])
    chosen_np = np.zeros(n, dtype=np.uint8)
    cdef const long long[::1] keys = keys_np
    cdef const long long[::1] offs = offs_np
    cdef const long long[::1] skeys = sorted_np
    cdef Py_ssize_t[::1] order = order_np
    cdef unsigned char[::1] chosen = chosen_np
    cdef Py_ssize_t i, j, o, p, no = offs.shape[0]
    cdef long long key
    cdef double s2 = sep * sep
    cdef bint ok
    with nogil:
        for i in range(n):
            ok = True
            for o in range(no):
                key = keys[i] + offs[o]
                p = _lower_bound(&skeys[0], n, key)
                while p < n and skeys[p] <= key + 2:
                    j = order[p]
                    p += 1
                    if chosen[j] and _dist2(&probes[0, 0], i, j, d) < s2:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                chosen[i] = 1
    return np.flatnonzero(chosen_np).astype(np.int64)
