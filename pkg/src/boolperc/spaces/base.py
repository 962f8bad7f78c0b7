"""Metric measure space abstraction.

Every backend answers the same scalar questions (distance, ball mass, ball
intersection, ...) about single points, plus a small batch protocol used by
the sampler and the clustering engine.  A *batch* is whatever container the
backend finds convenient for many points: an ``(n, dim)`` float array for
coordinate backends, a list of point objects otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple, Sequence

import numpy as np

from ..errors import DomainError, GeometryError, SamplingError, UsageError

REJECTION_CAP = 10**6


class MeasureInterval(NamedTuple):
    """Certified enclosure ``lower <= mu(B) <= upper``."""

    lower: float
    upper: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def ratio(self) -> float:
        return self.upper / self.lower if self.lower > 0 else float("inf")


def measure_value(m) -> float:
    """Point value of a possibly interval-valued mass (geometric midpoint)."""
    if isinstance(m, MeasureInterval):
        if m.lower <= 0:
            return m.upper
        return float(np.sqrt(m.lower * m.upper))
    return float(m)


@dataclass(frozen=True)
class SpaceDescriptor:
    s: float
    C_V: float
    sigma: float
    geodesic_flag: bool
    measure_total_on_unit_ball: float

    def __post_init__(self):
        if not (self.C_V >= 1 and self.sigma > 1 and self.s > 0):
            raise DomainError(f"invalid space constants {self}")


class Space:
    """Base class.  Subclasses fill in the metric, the measure and the rules."""

    kind = "abstract"
    point_type: type = object
    geodesic = True
    #: whether ball_sup_distance is only an upper envelope
    envelope = False

    s: float
    C_V: float
    sigma: float

    # ---- identity -------------------------------------------------------
    def descriptor(self) -> SpaceDescriptor:
        unit = self.ball_measure(self.origin(), 1.0)
        return SpaceDescriptor(self.s, self.C_V, self.sigma, self.geodesic, measure_value(unit))

    def to_json(self) -> dict:
        raise NotImplementedError

    def origin(self):
        raise NotImplementedError

    def point_to_json(self, p) -> Any:
        raise NotImplementedError

    def point_from_json(self, obj):
        raise NotImplementedError

    def check_point(self, p):
        if not isinstance(p, self.point_type):
            raise UsageError(f"{type(p).__name__} does not belong to a {self.kind} space")

    # ---- scalar geometry ------------------------------------------------
    def distance(self, p, q) -> float:
        raise NotImplementedError

    def ball_measure(self, x, r: float):
        raise NotImplementedError

    def balls_intersect(self, c1, r1: float, c2, r2: float) -> bool:
        if r1 <= 0 or r2 <= 0:
            raise DomainError("radii must be positive")
        d = self.distance(c1, c2)
        return bool(self.intersect_rule(np.float64(d), r1, r2))

    def ball_sup_distance(self, x, c, r: float) -> float:
        if r <= 0:
            raise DomainError("radius must be positive")
        return float(self.sup_rule(np.float64(self.distance(x, c)), r))

    def ball_meets_annulus(self, c, r: float, center, r_in: float, r_out: float) -> bool:
        if not 0 < r_in < r_out:
            raise DomainError("annulus needs 0 < r_in < r_out")
        return bool(self.meets_annulus(center, r_in, r_out, self.batch_from_points([c]), np.array([r]))[0])

    def sample_point(self, center, radius: float, rng: np.random.Generator):
        """One point drawn from mu restricted to B(center, radius), normalized."""
        if radius <= 0:
            raise DomainError("window radius must be positive")
        tries = 0
        while tries < REJECTION_CAP:
            n = min(64, REJECTION_CAP - tries)
            batch = self.sample_superset(center, radius, n, rng)
            tries += n
            inside = np.flatnonzero(self.accept(center, radius, batch, rng))
            if inside.size:
                return self.point(batch, int(inside[0]))
        raise SamplingError("rejection cap reached", tries=tries, kind=self.kind, radius=radius)

    # ---- rules on distances (vectorized) --------------------------------
    def intersect_rule(self, d, r1, r2):
        """Ball intersection decided from the center distance."""
        return d < np.asarray(r1) + np.asarray(r2)

    def sup_rule(self, d, r):
        return d + np.asarray(r)

    # ---- batch protocol -------------------------------------------------
    def superset_measure(self, center, radius: float) -> float:
        """Mass of a region containing B(center, radius) that sample_superset draws from."""
        raise NotImplementedError

    def sample_superset(self, center, radius: float, n: int, rng: np.random.Generator):
        raise NotImplementedError

    def accept(self, center, radius: float, batch, rng: np.random.Generator) -> np.ndarray:
        """Rejection step turning superset draws into draws from mu on the ball."""
        return self.distances(center, batch) < radius

    def batch_from_points(self, points: Sequence):
        return list(points)

    def empty_batch(self):
        return []

    def batch_len(self, batch) -> int:
        return len(batch)

    def take(self, batch, idx):
        return [batch[i] for i in np.asarray(idx, dtype=np.int64)]

    def concat(self, a, b):
        return list(a) + list(b)

    def point(self, batch, i: int):
        return batch[i]

    def distances(self, x, batch) -> np.ndarray:
        return np.array([self.distance(x, q) for q in batch], dtype=np.float64)

    def pairwise(self, batch) -> np.ndarray:
        n = self.batch_len(batch)
        out = np.zeros((n, n))
        for i in range(n):
            p = self.point(batch, i)
            for j in range(i + 1, n):
                out[i, j] = out[j, i] = self.distance(p, self.point(batch, j))
        return out

    def intersect_pairs(self, batch, radii: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """All index pairs i < j whose balls intersect (brute force)."""
        n = self.batch_len(batch)
        if n < 2:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        iu, ju = np.triu_indices(n, 1)
        dm = self.pairwise(batch)
        hit = self.intersect_rule(dm[iu, ju], radii[iu], radii[ju])
        return iu[hit], ju[hit]

    def intersects_ball(self, c, r: float, batch, radii) -> np.ndarray:
        return self.intersect_rule(self.distances(c, batch), r, radii)

    def sup_distances(self, x, batch, radii) -> np.ndarray:
        return self.sup_rule(self.distances(x, batch), radii)

    def meets_annulus(self, center, r_in, r_out, batch, radii) -> np.ndarray:
        """Which germ balls meet B(center, r_out) minus B(center, r_in)."""
        return np.array(
            [self._witness_annulus(self.point(batch, i), float(radii[i]), center, r_in, r_out)
             for i in range(self.batch_len(batch))],
            dtype=bool,
        )

    def _witness_annulus(self, c, r, center, r_in, r_out, probes: int = 4000, seed: int = 0) -> bool:
        """Search B(c, r) for a point at distance in [r_in, r_out) from center.

        The probe cloud stands in for a delta-net with delta = min(r, r_in) / 20.
        True is certified by a witness; False only means none was found.
        """
        d = self.distance(center, c)
        if d - r >= r_out or (self.geodesic and d + r <= r_in):
            return False
        if r_in <= d < r_out:
            return True
        rng = np.random.default_rng(seed)
        batch = self.sample_superset(c, r, probes, rng)
        dc = self.distances(c, batch)
        inside = dc < r
        dd = self.distances(center, self.take(batch, np.flatnonzero(inside)))
        return bool(np.any((dd >= r_in) & (dd < r_out)))

    def labels(self, batch, radii: np.ndarray) -> np.ndarray:
        """Connected-component labels of the ball-intersection graph."""
        from ..kernels import union_find_labels

        i, j = self.intersect_pairs(batch, radii)
        return union_find_labels(self.batch_len(batch), i, j)

    # ---- annulus helper ------------------------------------------------
    def annulus_nonempty_probe(self, x, r_in, r_out, rng, budget=10**5):
        """Targeted search for a point of B(x, r_out) minus B(x, r_in)."""
        tries = 0
        while tries < budget:
            n = min(2048, budget - tries)
            batch = self.sample_superset(x, r_out, n, rng)
            tries += n
            d = self.distances(x, batch)
            ok = np.flatnonzero((d >= r_in) & (d < r_out))
            if ok.size:
                return self.point(batch, int(ok[0]))
        return None


def check_same(space: Space, *points):
    for p in points:
        space.check_point(p)


def require_positive(r, name="r"):
    if not r > 0:
        raise DomainError(f"{name} must be positive, got {r}")


def geometry_guard(cond: bool, message: str):
    if not cond:
        raise GeometryError(message)
