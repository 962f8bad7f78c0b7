"""Finite metric space with counting measure, used as a negative control.

It is not unbounded and not uniformly perfect; the geometry checks are
expected to reject it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError
from .base import Space, require_positive


@dataclass(frozen=True)
class DiscretePoint:
    index: int


class DiscreteSpace(Space):
    kind = "discrete"
    point_type = DiscretePoint
    geodesic = False

    def __init__(self, positions=(0.0, 1.0), sigma: float = 2.0):
        self.positions = np.asarray(positions, dtype=np.float64)
        self.s = 1.0
        self.C_V = 1.0
        self.sigma = float(sigma)

    def __repr__(self):
        return f"DiscreteSpace({self.positions.tolist()})"

    def to_json(self):
        return {"kind": self.kind, "points": self.positions.tolist()}

    def origin(self):
        return DiscretePoint(0)

    def point_to_json(self, p):
        return p.index

    def point_from_json(self, obj):
        return DiscretePoint(int(obj))

    def _i(self, p):
        if type(p) is not DiscretePoint or not 0 <= p.index < len(self.positions):
            raise UsageError(f"{p!r} is not a point of {self!r}")
        return p.index

    def distance(self, p, q):
        return float(abs(self.positions[self._i(p)] - self.positions[self._i(q)]))

    def ball_measure(self, x, r):
        require_positive(r)
        return float(np.sum(np.abs(self.positions - self.positions[self._i(x)]) < r))

    def intersect_rule(self, d, r1, r2):
        raise NotImplementedError("use balls_intersect")

    def balls_intersect(self, c1, r1, c2, r2):
        a = np.abs(self.positions - self.positions[self._i(c1)]) < r1
        b = np.abs(self.positions - self.positions[self._i(c2)]) < r2
        return bool(np.any(a & b))

    def superset_measure(self, center, radius):
        return float(len(self.positions))

    def sample_superset(self, center, radius, n, rng):
        return [DiscretePoint(int(i)) for i in rng.integers(0, len(self.positions), n)]
