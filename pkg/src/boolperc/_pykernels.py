"""Pure-Python twins of the compiled kernels (same algorithms, same outputs)."""

from __future__ import annotations

import itertools
import math

import numpy as np


class _DSU:
    __slots__ = ("parent", "size")

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a):
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if self.size[a] < self.size[b]:
            a, b = b, a
        self.parent[b] = a
        self.size[a] += self.size[b]

    def labels(self):
        first = {}
        out = np.empty(len(self.parent), dtype=np.int64)
        for i in range(len(self.parent)):
            out[i] = first.setdefault(self.find(i), i)
        return out


def union_find_labels(n, ii, jj):
    dsu = _DSU(n)
    for a, b in zip(np.asarray(ii).tolist(), np.asarray(jj).tolist()):
        dsu.union(a, b)
    return dsu.labels()


def grid_labels(centers, radii, cell):
    centers = np.asarray(centers, dtype=np.float64)
    radii = np.asarray(radii, dtype=np.float64)
    n, d = centers.shape
    dsu = _DSU(n)
    pts = centers.tolist()
    rad = radii.tolist()
    small = [r <= cell for r in rad]
    cells = {}
    keys = []
    for i, p in enumerate(pts):
        key = tuple(math.floor(c / cell) for c in p)
        keys.append(key)
        cells.setdefault(key, []).append(i)
    offsets = list(itertools.product(range(-2, 3), repeat=d))

    def hit(i, j):
        rr = rad[i] + rad[j]
        return sum((a - b) ** 2 for a, b in zip(pts[i], pts[j])) < rr * rr

    for i in range(n):
        if not small[i]:
            continue
        ki = keys[i]
        for off in offsets:
            for j in cells.get(tuple(a + b for a, b in zip(ki, off)), ()):
                if j > i and small[j] and hit(i, j):
                    dsu.union(i, j)
    for i in range(n):
        if small[i]:
            continue
        for j in range(n):
            if j == i or (not small[j] and j < i):
                continue
            if hit(i, j):
                dsu.union(i, j)
    return dsu.labels()


def greedy_net(probes, sep):
    probes = np.asarray(probes, dtype=np.float64)
    n, d = probes.shape
    pts = probes.tolist()
    cells = {}
    chosen = []
    offsets = list(itertools.product(range(-1, 2), repeat=d))
    s2 = sep * sep
    for i, p in enumerate(pts):
        key = tuple(math.floor(c / sep) for c in p)
        ok = True
        for off in offsets:
            for j in cells.get(tuple(a + b for a, b in zip(key, off)), ()):
                q = pts[j]
                if sum((a - b) ** 2 for a, b in zip(p, q)) < s2:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            chosen.append(i)
            cells.setdefault(key, []).append(i)
    return np.asarray(chosen, dtype=np.int64)
