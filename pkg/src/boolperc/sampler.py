"""Realizations of the Poisson Boolean model inside a padded window.

Random streams
--------------
Replication ``i`` of an experiment seeded with ``seed`` draws from
``stream(seed, i)``: a PCG64 generator keyed by
``SeedSequence(entropy=seed, spawn_key=(i,))``.  Streams depend only on the
pair, so results do not depend on scheduling or worker count.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigurationError, DomainError
from .radii import RadiusLaw, law_from_json
from .spaces import Space, space_from_json

DEFAULT_HALO_FACTOR = 3.0
DEFAULT_TRUNCATION = 1.0 - 1e-6
MAGIC = b"PBM1"
BINARY_VERSION = 1


def stream(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))))


@dataclass
class BooleanSample:
    space: Space
    lam: float
    law: RadiusLaw
    window_center: Any
    window_radius: float
    halo_radius: float
    centers: Any
    radii: np.ndarray
    seed: int = 0
    stream_index: int = 0
    influence_bound: float = 0.0
    truncation_quantile: float | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.radii)

    @property
    def germs(self):
        """(center point, radius) pairs; slow, for inspection and tests."""
        return [(self.space.point(self.centers, i), float(r)) for i, r in enumerate(self.radii)]

    def with_germs(self, centers, radii) -> "BooleanSample":
        return BooleanSample(self.space, self.lam, self.law, self.window_center, self.window_radius,
                             self.halo_radius, centers, np.asarray(radii, dtype=np.float64), self.seed,
                             self.stream_index, self.influence_bound, self.truncation_quantile, dict(self.meta))

    def subset(self, idx) -> "BooleanSample":
        idx = np.asarray(idx, dtype=np.int64)
        return self.with_germs(self.space.take(self.centers, idx), self.radii[idx])

    # ---- serialization ----------------------------------------------------
    def _header(self) -> dict:
        return {
            "space": self.space.to_json(),
            "lambda": self.lam,
            "law": self.law.to_json(),
            "window_center": self.space.point_to_json(self.window_center),
            "window_radius": self.window_radius,
            "halo_radius": self.halo_radius,
            "seed": self.seed,
            "stream": self.stream_index,
            "influence_bound": self.influence_bound,
            "truncation_quantile": self.truncation_quantile,
        }

    def to_json(self) -> str:
        doc = self._header()
        doc["germs"] = [[self.space.point_to_json(p), r] for p, r in self.germs]
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "BooleanSample":
        doc = json.loads(text)
        space = space_from_json(doc["space"])
        pts = [space.point_from_json(c) for c, _ in doc["germs"]]
        radii = np.array([r for _, r in doc["germs"]], dtype=np.float64)
        return cls._from_header(doc, space, space.batch_from_points(pts) if pts else space.empty_batch(), radii)

    @classmethod
    def _from_header(cls, doc, space, centers, radii):
        return cls(space, doc["lambda"], law_from_json(doc["law"]), space.point_from_json(doc["window_center"]),
                   doc["window_radius"], doc["halo_radius"], centers, radii, doc["seed"], doc["stream"],
                   doc["influence_bound"], doc["truncation_quantile"])

    def to_bytes(self) -> bytes:
        """Little-endian dump: magic, version, header JSON, count, centers, radii."""
        head = self._header()
        coords = isinstance(self.centers, np.ndarray)
        if not coords:
            head["centers"] = [self.space.point_to_json(self.space.point(self.centers, i))
                               for i in range(len(self.radii))]
        blob = json.dumps(head, sort_keys=True).encode()
        out = [MAGIC, struct.pack("<HI", BINARY_VERSION, len(blob)), blob, struct.pack("<Q", len(self.radii))]
        if coords:
            out.append(struct.pack("<I", self.centers.shape[1]))
            out.append(np.ascontiguousarray(self.centers, dtype="<f8").tobytes())
        else:
            out.append(struct.pack("<I", 0))
        out.append(np.ascontiguousarray(self.radii, dtype="<f8").tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BooleanSample":
        if data[:4] != MAGIC:
            raise ConfigurationError("not a PBM1 sample dump")
        version, hlen = struct.unpack_from("<HI", data, 4)
        if version != BINARY_VERSION:
            raise ConfigurationError(f"unsupported dump version {version}")
        off = 10
        doc = json.loads(data[off:off + hlen].decode())
        off += hlen
        (n,) = struct.unpack_from("<Q", data, off)
        (dim,) = struct.unpack_from("<I", data, off + 8)
        off += 12
        space = space_from_json(doc["space"])
        if dim:
            centers = np.frombuffer(data, dtype="<f8", count=n * dim, offset=off).reshape(n, dim).astype(np.float64)
            off += 8 * n * dim
        else:
            pts = [space.point_from_json(c) for c in doc["centers"]]
            centers = space.batch_from_points(pts) if pts else space.empty_batch()
        radii = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(np.float64)
        return cls._from_header(doc, space, centers, radii)


def far_ball_influence_bound(space, lam: float, law: RadiusLaw, window_radius: float, halo_radius: float) -> float:
    """Mecke-type bound on P(some germ centred outside the halo reaches the window).

    ``space`` only needs ``s`` and ``C_V`` attributes.
    """
    if not halo_radius > window_radius:
        raise DomainError("halo must be strictly larger than the window")
    gap = halo_radius - window_radius
    # such a germ has R > gap, so (R + W) <= R * max(2, 1 + W / gap)
    factor = max(2.0, 1.0 + window_radius / gap) ** space.s
    tail = law.tail_moment(space.s, gap / 2.0)
    if math.isinf(tail):
        return 1.0
    return min(1.0, lam * space.C_V * factor * tail)


def sample_boolean_model(space: Space, lam: float, law: RadiusLaw, window_center, window_radius: float,
                         halo_factor: float = DEFAULT_HALO_FACTOR, rng: np.random.Generator | None = None, *,
                         seed: int = 0, stream_index: int = 0,
                         truncation_quantile: float | None = DEFAULT_TRUNCATION) -> BooleanSample:
    """Poisson germs with centres in B(window_center, halo_factor * window_radius)."""
    if not lam > 0:
        raise DomainError("intensity must be positive")
    if not window_radius > 0:
        raise DomainError("window radius must be positive")
    if not halo_factor >= 1:
        raise DomainError("halo_factor must be >= 1")
    if rng is None:
        rng = stream(seed, stream_index)
    halo = halo_factor * window_radius
    mass = space.superset_measure(window_center, halo)
    if not math.isfinite(mass):
        raise ConfigurationError(f"halo ball has infinite mass in {space!r}")
    n = int(rng.poisson(lam * mass))
    batch = space.sample_superset(window_center, halo, n, rng)
    if n:
        batch = space.take(batch, np.flatnonzero(space.accept(window_center, halo, batch, rng)))
    k = space.batch_len(batch)
    q = truncation_quantile if (truncation_quantile is not None and not law.bounded) else None
    radii = np.asarray(law.sample(rng, size=k, u_max=q if q is not None else 1.0), dtype=np.float64)
    if halo > window_radius:
        influence = far_ball_influence_bound(space, lam, law, window_radius, halo)
    else:
        influence = 1.0
    if q is not None:
        influence = min(1.0, influence + lam * mass * (1.0 - q))
    return BooleanSample(space, float(lam), law, window_center, float(window_radius), float(halo), batch, radii,
                         int(seed), int(stream_index), float(influence), q)
