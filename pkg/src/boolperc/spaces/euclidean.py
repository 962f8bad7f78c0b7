"""Euclidean space and its density-weighted variant."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .. import kernels
from ..errors import ConfigurationError, DomainError, UsageError
from .base import Space, require_positive


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class EuclideanPoint:
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in np.atleast_1d(self.coords)))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True)
class WeightedPoint(EuclideanPoint):
    pass


def _uniform_ball(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """n uniform points in the unit ball (box rejection for dim <= 3)."""
    if dim > 3:
        g = rng.standard_normal((n, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * rng.random((n, 1)) ** (1.0 / dim)
    out = np.empty((0, dim))
    while out.shape[0] < n:
        need = n - out.shape[0]
        box = rng.uniform(-1.0, 1.0, (int(need * 2.2) + 8, dim))
        box = box[np.einsum("ij,ij->i", box, box) < 1.0]
        out = np.vstack([out, box[:need]])
    return out


class EuclideanSpace(Space):
    kind = "euclidean"
    point_type = EuclideanPoint
    geodesic = True

    def __init__(self, dim: int = 2, sigma: float = 2.0):
        if dim < 1:
            raise DomainError("dimension must be >= 1")
        self.dim = int(dim)
        self.s = float(dim)
        omega = unit_ball_volume(self.dim)
        self.C_V = max(omega, 1.0 / omega)
        self.sigma = float(sigma)

    def __repr__(self):
        return f"EuclideanSpace(dim={self.dim})"

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim}

    def make_point(self, *coords):
        if len(coords) == 1 and np.ndim(coords[0]) == 1:
            coords = tuple(coords[0])
        return self.point_type(coords)

    def origin(self):
        return self.point_type((0.0,) * self.dim)

    def point_to_json(self, p):
        return list(p.coords)

    def point_from_json(self, obj):
        return self.point_type(tuple(obj))

    def _xy(self, p) -> np.ndarray:
        if type(p) is not self.point_type or len(p.coords) != self.dim:
            raise UsageError(f"{p!r} is not a point of {self!r}")
        return np.asarray(p.coords)

    # scalar ------------------------------------------------------------
    def distance(self, p, q) -> float:
        return float(np.linalg.norm(self._xy(p) - self._xy(q)))

    def ball_measure(self, x, r: float):
        require_positive(r)
        self._xy(x)
        return unit_ball_volume(self.dim) * r**self.dim

    # batch -------------------------------------------------------------
    def superset_measure(self, center, radius):
        return unit_ball_volume(self.dim) * radius**self.dim

    def sample_superset(self, center, radius, n, rng):
        return self._xy(center) + radius * _uniform_ball(n, self.dim, rng)

    def accept(self, center, radius, batch, rng):
        return np.ones(len(batch), dtype=bool)

    def batch_from_points(self, points):
        if not points:
            return self.empty_batch()
        return np.array([self._xy(p) for p in points], dtype=np.float64)

    def empty_batch(self):
        return np.empty((0, self.dim))

    def take(self, batch, idx):
        return batch[np.asarray(idx, dtype=np.int64)]

    def concat(self, a, b):
        return np.vstack([a, b])

    def point(self, batch, i):
        return self.point_type(tuple(batch[i]))

    def distances(self, x, batch):
        if len(batch) == 0:
            return np.empty(0)
        return np.linalg.norm(batch - self._xy(x), axis=1)

    def pairwise(self, batch):
        diff = batch[:, None, :] - batch[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def meets_annulus(self, center, r_in, r_out, batch, radii):
        # open ball B(c, R) attains distances (d - R, d + R) from center
        d = self.distances(center, batch)
        return (d + radii > r_in) & (d - radii < r_out)

    def labels(self, batch, radii):
        if len(batch) == 0:
            return np.empty(0, dtype=np.int64)
        cell = float(np.median(radii))
        return kernels.grid_labels(batch, radii, cell if cell > 0 else 1.0)

    def intersect_pairs(self, batch, radii):
        n = len(batch)
        if n < 2:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        iu, ju = np.triu_indices(n, 1)
        d = np.linalg.norm(batch[iu] - batch[ju], axis=1)
        hit = d < radii[iu] + radii[ju]
        return iu[hit], ju[hit]


# ---------------------------------------------------------------------------
# weighted Euclidean


@dataclass(frozen=True)
class Density:
    """Density g with bounds gmin <= g <= gmax.

    ``axial`` densities depend on the first coordinate only and take a 1-D
    array; others take an ``(n, dim)`` array.  ``primitive(center, r)`` gives
    the exact ball mass when known.
    """

    name: str
    g: Callable
    gmin: float
    gmax: float
    axial: bool = True
    primitive: Optional[Callable] = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return self.g(pts[:, 0]) if self.axial else self.g(pts)


def _halfspace_primitive(center, r):
    """1 on x0 < 0 and 3 on x0 >= 0: ball mass from the circular segment (dim <= 2)."""
    c0 = float(center[0])
    dim = len(center)
    t = max(-1.0, min(1.0, c0 / r))
    if dim == 1:
        right = r * (1 + t)
    elif dim == 2:
        # area of the part of the disc with x0 >= 0
        right = r * r * (math.acos(-t) + t * math.sqrt(1 - t * t))
    else:
        return None
    total = unit_ball_volume(dim) * r**dim
    return (total - right) + 3.0 * right


def _constant_primitive(center, r):
    return 2.0 * unit_ball_volume(len(center)) * r ** len(center)


BUILTIN_DENSITIES = {
    "constant2": Density("constant2", lambda t: np.full_like(t, 2.0, dtype=float), 2.0, 2.0,
                         primitive=_constant_primitive),
    "halfspace": Density("halfspace", lambda t: np.where(t < 0, 1.0, 3.0), 1.0, 3.0,
                         primitive=_halfspace_primitive),
    "periodic": Density("periodic", lambda t: 1.0 + 0.5 * np.sin(t), 0.5, 1.5),
}


class WeightedEuclideanSpace(EuclideanSpace):
    """R^n with d mu = g dx and the Euclidean metric."""

    kind = "weighted"
    point_type = WeightedPoint

    def __init__(self, dim: int = 2, density: Density | str = "periodic", sigma: float = 2.0,
                 rtol: float = 1e-6):
        super().__init__(dim, sigma)
        if isinstance(density, str):
            try:
                density = BUILTIN_DENSITIES[density]
            except KeyError:
                raise ConfigurationError(f"unknown density {density!r}") from None
        if not 0 < density.gmin <= density.gmax:
            raise ConfigurationError("density bounds must satisfy 0 < gmin <= gmax")
        self.density = density
        self.rtol = rtol
        omega = unit_ball_volume(self.dim)
        self.C_V = max(density.gmax * omega, 1.0 / (density.gmin * omega), 1.0)

    def __repr__(self):
        return f"WeightedEuclideanSpace(dim={self.dim}, density={self.density.name})"

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim, "density": self.density.name}

    def ball_measure(self, x, r: float):
        require_positive(r)
        c = self._xy(x)
        if self.density.primitive is not None:
            val = self.density.primitive(c, r)
            if val is not None:
                return float(val)
        return self._quadrature(c, r)

    def _quadrature(self, c, r):
        dens = self.density
        if dens.axial:
            n = self.dim
            wn = unit_ball_volume(n - 1) if n > 1 else 1.0

            def slab(t):
                h2 = max(r * r - (t - c[0]) ** 2, 0.0)
                return float(dens.g(np.array([t]))[0]) * wn * h2 ** ((n - 1) / 2)

            val, _ = integrate.quad(slab, c[0] - r, c[0] + r, epsrel=self.rtol, limit=200)
            return val
        if self.dim == 2:
            def polar(rho, phi):
                p = c + rho * np.array([math.cos(phi), math.sin(phi)])
                return float(dens(p)[0]) * rho

            val, _ = integrate.dblquad(polar, 0, 2 * math.pi, 0, r, epsrel=self.rtol)
            return val
        if self.dim == 1:
            val, _ = integrate.quad(lambda t: float(dens(np.array([[t]]))[0]), c[0] - r, c[0] + r,
                                    epsrel=self.rtol)
            return val
        raise ConfigurationError("quadrature for non-axial densities needs dim <= 2")

    def superset_measure(self, center, radius):
        return self.density.gmax * unit_ball_volume(self.dim) * radius**self.dim

    def accept(self, center, radius, batch, rng):
        # thin the dominating uniform law down to g dx
        return rng.random(len(batch)) * self.density.gmax < self.density(batch)
