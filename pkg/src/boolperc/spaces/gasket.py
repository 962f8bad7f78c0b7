"""Unbounded Sierpinski gasket with its intrinsic (path-length) metric.

A point is ``2**scale * F_w(a_v)`` where ``w`` is a base-3 address and ``v``
its last digit, i.e. corner ``v`` of the level-``len(w)`` cell ``w`` inside
the scaled copy ``2**scale * SG``.  The empty address is the origin.  Copies
nest (``2**n SG`` is cell 0 of ``2**(n+1) SG``), so points of different
scales are compared after prepending zeros.

Distances are graph distances on the level-m approximation, m being the
longer address.  They are computed by carrying the distances to the three
corners of each enclosing cell upward through the address, which costs
O(m) instead of a shortest-path search.  Cells meet other cells only at
corners, so a geodesic between two points of a cell never leaves it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DomainError, SamplingError, UsageError
from .base import MeasureInterval, Space, require_positive

CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
DIM = math.log(3.0) / math.log(2.0)
#: extra random digits below the window's cell level when sampling
SAMPLE_DEPTH = 22
MAX_REFINE = 40


@dataclass(frozen=True)
class GasketPoint:
    scale: int = 0
    address: tuple = ()

    def __post_init__(self):
        addr = tuple(int(a) for a in self.address)
        if any(a not in (0, 1, 2) for a in addr):
            raise DomainError("gasket address digits must be 0, 1 or 2")
        object.__setattr__(self, "address", addr)
        object.__setattr__(self, "scale", int(self.scale))

    @property
    def ambient(self) -> tuple:
        return _ambient(self.scale, self.address)


@lru_cache(maxsize=1 << 16)
def _ambient(scale, address):
    if not address:
        return (0.0, 0.0)
    x = CORNERS[address[-1]].copy()
    for a in reversed(address):
        x = 0.5 * (x + CORNERS[a])
    x *= 2.0**scale
    return (float(x[0]), float(x[1]))


def _lift(p: GasketPoint, n: int) -> tuple:
    return (0,) * (n - p.scale) + p.address


def _pad(addr: tuple, depth: int) -> tuple:
    """Same point, written with a longer address (repeat the final corner)."""
    if len(addr) >= depth:
        return addr
    last = addr[-1] if addr else 0
    return addr + (last,) * (depth - len(addr))


@lru_cache(maxsize=1 << 15)
def corner_dists(addr: tuple, n: int, level: int) -> tuple:
    """Distances from the point ``addr`` (at scale n) to the corners of cell ``addr[:level]``."""
    m = len(addr)
    if m == 0:
        side = 2.0**n
        return (0.0, side, side)
    if level == m:
        side = 2.0 ** (n - m)
        e = [side, side, side]
        e[addr[-1]] = 0.0
        return tuple(e)
    e = corner_dists(addr, n, level + 1)
    i = addr[level]
    h = 2.0 ** (n - level - 1)
    out = [0.0, 0.0, 0.0]
    out[i] = e[i]
    for j in range(3):
        if j != i:
            k = 3 - i - j
            out[j] = min(e[j] + h, e[k] + 2.0 * h)
    return tuple(out)


def gasket_distance(p: GasketPoint, q: GasketPoint) -> float:
    n = max(p.scale, q.scale)
    u, v = _lift(p, n), _lift(q, n)
    c = 0
    lim = min(len(u), len(v))
    while c < lim and u[c] == v[c]:
        c += 1
    if c == len(u) and c == len(v):
        return 0.0
    if c == len(u):
        return corner_dists(v, n, c)[u[-1] if u else 0]
    if c == len(v):
        return corner_dists(u, n, c)[v[-1] if v else 0]
    i, j = u[c], v[c]
    k = 3 - i - j
    ep = corner_dists(u, n, c + 1)
    eq = corner_dists(v, n, c + 1)
    h = 2.0 ** (n - c - 1)
    return min(ep[j] + eq[i], ep[k] + h + eq[k])


def _midpoints_outside(D, h):
    """Distances to the edge midpoints M_ij of a cell not containing the source."""
    M = {}
    for i in range(3):
        for j in range(i + 1, 3):
            k = 3 - i - j
            M[i, j] = M[j, i] = min(D[i] + h, D[j] + h, D[k] + 2.0 * h)
    return M


def _child_corners(D, M, i):
    out = [0.0, 0.0, 0.0]
    for j in range(3):
        out[j] = D[i] if j == i else M[i, j]
    return tuple(out)


class GasketSpace(Space):
    kind = "gasket"
    point_type = GasketPoint
    geodesic = True
    envelope = True

    def __init__(self, sigma: float = 2.0, C_V: float = 4.0, ratio_target: float = 1.01):
        self.s = DIM
        self.C_V = float(C_V)
        self.sigma = float(sigma)
        self.ratio_target = ratio_target
        self._cover = lru_cache(maxsize=4096)(self._cover_uncached)

    def __repr__(self):
        return "GasketSpace()"

    def to_json(self):
        return {"kind": self.kind}

    def origin(self):
        return GasketPoint(0, ())

    def make_point(self, scale=0, address=()):
        return GasketPoint(scale, tuple(address))

    def point_to_json(self, p):
        return {"scale": p.scale, "address": list(p.address), "ambient": list(p.ambient)}

    def point_from_json(self, obj):
        return GasketPoint(obj["scale"], tuple(obj["address"]))

    def _check(self, p):
        if type(p) is not GasketPoint:
            raise UsageError(f"{p!r} is not a gasket point")

    def distance(self, p, q) -> float:
        self._check(p)
        self._check(q)
        return gasket_distance(p, q)

    # ---- cell traversal -------------------------------------------------
    def _top_scale(self, x: GasketPoint, r: float) -> int:
        """Smallest scale whose copy of SG contains B(x, r)."""
        n = max(x.scale, math.ceil(math.log2(max(r, 1e-300))) + 1)
        while True:
            u = _lift(x, n)
            d = corner_dists(u, n, 0)
            if min(d[1], d[2]) >= r:
                return n
            n += 1

    def _classify(self, x: GasketPoint, r: float, min_side: float | None = None):
        """Yield-free level-by-level refinement.

        Returns (n, inside, boundary) where ``inside`` / ``boundary`` are lists
        of (prefix, level) cells; refinement stops once the mass ratio target
        is met and, if given, cells are no larger than ``min_side``.
        """
        n = self._top_scale(x, r)
        xa = _lift(x, n)
        inside = []
        # frontier entries: (prefix, D corner distances, contains_x)
        frontier = [((), corner_dists(xa, n, 0), True)]
        level = 0
        inside_mass = 0.0
        while True:
            side = 2.0 ** (n - level)
            mass = 3.0 ** (n - level)
            nxt_bound = []
            for prefix, D, has_x in frontier:
                lo = 0.0 if has_x else min(D)
                hi = side if has_x else min(D) + side
                if lo >= r:
                    continue
                if hi < r:
                    inside.append((prefix, level))
                    inside_mass += mass
                else:
                    nxt_bound.append((prefix, D, has_x))
            frontier = nxt_bound
            upper = inside_mass + len(frontier) * mass
            small_enough = min_side is None or side <= min_side
            if small_enough and (inside_mass > 0 and upper / inside_mass <= self.ratio_target
                                 or not frontier or level >= MAX_REFINE):
                return n, inside, [(p, level) for p, _, _ in frontier], inside_mass, upper
            # refine
            h = side / 2.0
            children = []
            xpad = _pad(xa, level + 1)
            for prefix, D, has_x in frontier:
                if has_x:
                    a = xpad[level]
                    eX = corner_dists(_pad(xa, level + 1), n, level + 1)
                    b, c = [j for j in range(3) if j != a]
                    M = {(a, b): eX[b], (b, a): eX[b], (a, c): eX[c], (c, a): eX[c]}
                    M[b, c] = M[c, b] = min(eX[b], eX[c]) + h
                else:
                    M = _midpoints_outside(D, h)
                for i in range(3):
                    child_has_x = has_x and i == xpad[level]
                    Dc = corner_dists(_pad(xa, level + 1), n, level + 1) if child_has_x \
                        else _child_corners(D, M, i)
                    children.append((prefix + (i,), Dc, child_has_x))
            frontier = children
            level += 1

    def ball_measure(self, x, r: float):
        """Certified interval; a unit copy of SG has mass 1."""
        require_positive(r)
        self._check(x)
        _, _, _, lower, upper = self._classify(x, r)
        # round outward so float summation cannot break the certificate
        return MeasureInterval(lower * (1 - 1e-12), upper * (1 + 1e-12))

    def _cover_uncached(self, x, r):
        n, inside, boundary, _, _ = self._classify(x, r, min_side=r / 8.0)
        cells = inside + boundary
        masses = np.array([3.0 ** (n - lvl) for _, lvl in cells])
        return n, cells, masses, float(masses.sum())

    def superset_measure(self, center, radius):
        self._check(center)
        return self._cover(center, float(radius))[3]

    def sample_superset(self, center, radius, n, rng):
        top, cells, masses, total = self._cover(center, float(radius))
        if total <= 0:
            raise SamplingError("empty cover", radius=radius)
        pick = rng.choice(len(cells), size=n, p=masses / total)
        digits = rng.integers(0, 3, size=(n, SAMPLE_DEPTH))
        out = []
        for c, row in zip(pick.tolist(), digits.tolist()):
            prefix, _ = cells[c]
            out.append(GasketPoint(top, prefix + tuple(row)))
        return out

    # ---- batch helpers ---------------------------------------------------
    def ambient_array(self, batch) -> np.ndarray:
        if not batch:
            return np.empty((0, 2))
        return np.array([p.ambient for p in batch])

    def intersect_pairs(self, batch, radii):
        """Ambient prefilter (Euclidean <= geodesic), exact check on survivors."""
        n = len(batch)
        if n < 2:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        amb = self.ambient_array(batch)
        iu, ju = np.triu_indices(n, 1)
        reach = radii[iu] + radii[ju]
        cand = np.linalg.norm(amb[iu] - amb[ju], axis=1) < reach
        iu, ju, reach = iu[cand], ju[cand], reach[cand]
        d = np.array([gasket_distance(batch[a], batch[b]) for a, b in zip(iu.tolist(), ju.tolist())])
        hit = d < reach if d.size else np.zeros(0, dtype=bool)
        return iu[hit], ju[hit]
