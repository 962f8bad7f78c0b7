"""Dyadic ultrametric space: finitely supported two-sided binary expansions.

A point is a finite set of indices carrying a 1-digit.  Two points at
distance ``2**k`` first differ at index ``k``.  Indices run upward without
bound; downward they stop at ``FLOOR`` (the sampling resolution).  Digits are
packed into one Python int, bit ``j`` standing for index ``j + FLOOR``.

The Haar-type measure gives the closed ball of radius ``2**k`` mass
``2**k``, so the space is 1-regular with ``C_V = 2``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, UsageError
from ..kernels import union_find_labels
from .base import Space, require_positive

FLOOR = -64


@dataclass(frozen=True)
class DyadicPoint:
    bits: int = 0

    @classmethod
    def from_digits(cls, indices) -> "DyadicPoint":
        bits = 0
        for k in indices:
            if k < FLOOR:
                raise DomainError(f"digit index {k} below resolution floor {FLOOR}")
            bits |= 1 << (k - FLOOR)
        return cls(bits)

    @property
    def digits(self) -> dict:
        out, b, j = {}, self.bits, 0
        while b:
            if b & 1:
                out[j + FLOOR] = 1
            b >>= 1
            j += 1
        return out

    @property
    def highest(self):
        return self.bits.bit_length() - 1 + FLOOR if self.bits else None


def level_below(r: float) -> int:
    """Largest k with 2**k < r."""
    m, e = math.frexp(r)
    return e - 2 if m == 0.5 else e - 1


def pred(r):
    """Largest value of the distance spectrum strictly below r (vectorized)."""
    m, e = np.frexp(np.asarray(r, dtype=np.float64))
    k = np.where(m == 0.5, e - 2, e - 1)
    return np.ldexp(1.0, k)


def _dist(a: int, b: int) -> float:
    x = a ^ b
    return math.ldexp(1.0, x.bit_length() - 1 + FLOOR) if x else 0.0


class DyadicSpace(Space):
    kind = "dyadic"
    point_type = DyadicPoint
    geodesic = False

    def __init__(self, sigma: float = 2.0):
        self.s = 1.0
        self.C_V = 2.0
        self.sigma = float(sigma)

    def __repr__(self):
        return "DyadicSpace()"

    def to_json(self):
        return {"kind": self.kind}

    def origin(self):
        return DyadicPoint(0)

    def make_point(self, indices=()):
        return DyadicPoint.from_digits(indices)

    def point_to_json(self, p):
        return sorted(p.digits)

    def point_from_json(self, obj):
        return DyadicPoint.from_digits(obj)

    def _bits(self, p) -> int:
        if type(p) is not DyadicPoint:
            raise UsageError(f"{p!r} is not a dyadic point")
        return p.bits

    def distance(self, p, q) -> float:
        return _dist(self._bits(p), self._bits(q))

    def ball_measure(self, x, r: float):
        require_positive(r)
        self._bits(x)
        return math.ldexp(1.0, level_below(r))

    # rules
    def intersect_rule(self, d, r1, r2):
        return d < np.maximum(r1, r2)

    def sup_rule(self, d, r):
        return np.maximum(d, pred(r))

    # sampling: the ball is a cylinder, so the superset is exact
    def superset_measure(self, center, radius):
        return math.ldexp(1.0, level_below(radius))

    def sample_superset(self, center, radius, n, rng):
        k = level_below(radius)
        base = self._bits(center)
        nfree = k - FLOOR + 1
        if nfree <= 0:
            return [DyadicPoint(base)] * n
        keep = (base >> nfree) << nfree
        nbytes = (nfree + 7) // 8
        mask = (1 << nfree) - 1
        raw = rng.bytes(nbytes * n)
        return [DyadicPoint(keep | (int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") & mask))
                for i in range(n)]

    def accept(self, center, radius, batch, rng):
        return np.ones(len(batch), dtype=bool)

    def distances(self, x, batch):
        a = self._bits(x)
        return np.fromiter((_dist(a, q.bits) for q in batch), dtype=np.float64, count=len(batch))

    def meets_annulus(self, center, r_in, r_out, batch, radii):
        d = self.distances(center, batch)
        radii = np.asarray(radii, dtype=np.float64)
        # smallest spectrum value >= r_in
        first = max(math.ldexp(1.0, math.ceil(math.log2(r_in))), math.ldexp(1.0, FLOOR))
        outside = (d >= r_in) & (d < r_out)
        inside = (first < r_out) & (first <= pred(radii))
        return np.where(d >= radii, outside, inside)

    def intersect_pairs(self, batch, radii):
        """Cylinder-prefix buckets: a ball of level k is the set sharing bits above k."""
        n = len(batch)
        if n < 2:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        levels = [level_below(float(r)) for r in radii]
        buckets: dict[int, dict[int, list]] = defaultdict(lambda: defaultdict(list))
        for i, (p, k) in enumerate(zip(batch, levels)):
            buckets[k][p.bits >> max(k - FLOOR + 1, 0)].append(i)
        ii, jj = [], []
        for j, (p, kj) in enumerate(zip(batch, levels)):
            for k, table in buckets.items():
                if k < kj:
                    continue
                for i in table.get(p.bits >> max(k - FLOOR + 1, 0), ()):
                    if i != j and (k > kj or i < j):
                        ii.append(min(i, j))
                        jj.append(max(i, j))
        return np.asarray(ii, dtype=np.int64), np.asarray(jj, dtype=np.int64)

    def labels(self, batch, radii):
        i, j = self.intersect_pairs(batch, radii)
        return union_find_labels(len(batch), i, j)
