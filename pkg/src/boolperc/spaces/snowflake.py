"""Snowflake transform (S, d**alpha, mu) of another backend."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ..errors import DomainError, UsageError
from .base import Space, require_positive


@dataclass(frozen=True)
class SnowflakePoint:
    inner: Any


class SnowflakeSpace(Space):
    """Every question is pulled back to the base with radii ``r ** (1/alpha)``."""

    kind = "snowflake"
    point_type = SnowflakePoint
    geodesic = False

    def __init__(self, base: Space, alpha: float, sigma: float | None = None):
        if not 0 < alpha < 1:
            raise DomainError("snowflake exponent must lie in (0, 1)")
        self.base = base
        self.alpha = float(alpha)
        self.s = base.s / self.alpha
        self.C_V = base.C_V
        self.sigma = float(sigma) if sigma is not None else float(max(2.0, math.ceil(base.sigma**alpha)))
        self.envelope = base.envelope

    def __repr__(self):
        return f"SnowflakeSpace({self.base!r}, alpha={self.alpha})"

    def to_json(self):
        return {"kind": self.kind, "alpha": self.alpha, "base": self.base.to_json()}

    def _pull(self, r):
        return np.asarray(r, dtype=np.float64) ** (1.0 / self.alpha)

    def wrap(self, p) -> SnowflakePoint:
        return SnowflakePoint(p)

    def _in(self, p):
        if type(p) is not SnowflakePoint:
            raise UsageError(f"{p!r} is not a snowflake point")
        return p.inner

    def origin(self):
        return SnowflakePoint(self.base.origin())

    def point_to_json(self, p):
        return {"inner": self.base.point_to_json(p.inner)}

    def point_from_json(self, obj):
        return SnowflakePoint(self.base.point_from_json(obj["inner"]))

    def distance(self, p, q):
        return self.base.distance(self._in(p), self._in(q)) ** self.alpha

    def ball_measure(self, x, r):
        require_positive(r)
        return self.base.ball_measure(self._in(x), float(self._pull(r)))

    def intersect_rule(self, d, r1, r2):
        return self.base.intersect_rule(self._pull(d), self._pull(r1), self._pull(r2))

    def sup_rule(self, d, r):
        return self.base.sup_rule(self._pull(d), self._pull(r)) ** self.alpha

    # scalar predicates use the base distance itself, avoiding the d**alpha round trip
    def balls_intersect(self, c1, r1, c2, r2):
        if r1 <= 0 or r2 <= 0:
            raise DomainError("radii must be positive")
        d = np.float64(self.base.distance(self._in(c1), self._in(c2)))
        return bool(self.base.intersect_rule(d, self._pull(r1), self._pull(r2)))

    def ball_sup_distance(self, x, c, r):
        if r <= 0:
            raise DomainError("radius must be positive")
        d = np.float64(self.base.distance(self._in(x), self._in(c)))
        return float(self.base.sup_rule(d, self._pull(r)) ** self.alpha)

    # batches are base batches
    def superset_measure(self, center, radius):
        return self.base.superset_measure(self._in(center), float(self._pull(radius)))

    def sample_superset(self, center, radius, n, rng):
        return self.base.sample_superset(self._in(center), float(self._pull(radius)), n, rng)

    def accept(self, center, radius, batch, rng):
        return self.base.accept(self._in(center), float(self._pull(radius)), batch, rng)

    def batch_from_points(self, points):
        return self.base.batch_from_points([self._in(p) for p in points])

    def empty_batch(self):
        return self.base.empty_batch()

    def batch_len(self, batch):
        return self.base.batch_len(batch)

    def take(self, batch, idx):
        return self.base.take(batch, idx)

    def concat(self, a, b):
        return self.base.concat(a, b)

    def point(self, batch, i):
        return SnowflakePoint(self.base.point(batch, i))

    def distances(self, x, batch):
        return self.base.distances(self._in(x), batch) ** self.alpha

    def pairwise(self, batch):
        return self.base.pairwise(batch) ** self.alpha

    def intersect_pairs(self, batch, radii):
        return self.base.intersect_pairs(batch, self._pull(radii))

    def labels(self, batch, radii):
        return self.base.labels(batch, self._pull(radii))

    def meets_annulus(self, center, r_in, r_out, batch, radii):
        return self.base.meets_annulus(self._in(center), float(self._pull(r_in)), float(self._pull(r_out)),
                                       batch, self._pull(radii))

    def ambient_array(self, batch):
        return self.base.ambient_array(batch)

