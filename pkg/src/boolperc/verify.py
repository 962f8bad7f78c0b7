"""Constructive geometry checks: separated nets, Ahlfors fits, uniform perfectness.

Nets are built greedily from random probe points.  For condition (I) a probe
joins the net when it is at distance >= 0.9 l from every current member, so
the result is 0.9 l-separated (hence eps*l-separated for eps <= 0.9) and covers
every probe within 0.9 l; the slack leaves room for unprobed gaps.  Coverage
of the whole region is certified statistically: fresh probe sets are drawn
until one is entirely covered.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import DomainError, GeometryError
from .sampler import stream
from .spaces import EuclideanSpace, GasketSpace, SnowflakeSpace, Space
from .spaces.base import measure_value

MAX_ROUNDS = 60
NET_SLACK = 0.9
SANDWICH_RTOL = 1e-9  # equality cases are exact in theory but not in floating point


# ---------------------------------------------------------------------------
# metric helpers


class _Metric:
    """Net operations for one space; Euclidean-like metrics go through the kernels."""

    def __init__(self, space: Space):
        self.space = space
        self.euclid = None  # power p with d = |a - b| ** p on coords
        base = space
        power = 1.0
        if isinstance(space, SnowflakeSpace):
            base, power = space.base, space.alpha
        if isinstance(base, EuclideanSpace):
            self.euclid = power
        self.prefilter = isinstance(space, GasketSpace)  # ambient distance <= true distance

    def coords(self, batch):
        if self.euclid is not None:
            return np.asarray(batch, dtype=np.float64)
        return self.space.ambient_array(batch)

    def flat(self, length: float) -> float:
        return length ** (1.0 / self.euclid)

    def greedy(self, batch, sep: float) -> np.ndarray:
        """Indices kept by a greedy sep-separated scan in batch order."""
        n = self.space.batch_len(batch)
        if n == 0:
            return np.empty(0, np.int64)
        if self.euclid is not None:
            return np.asarray(kernels.greedy_net(self.coords(batch), self.flat(sep)), dtype=np.int64)
        amb = self.coords(batch) if self.prefilter else None
        kept: list[int] = []
        for i in range(n):
            cand = kept
            if amb is not None and kept:
                near = np.linalg.norm(amb[kept] - amb[i], axis=1) < sep
                cand = [k for k, f in zip(kept, near) if f]
            if cand:
                d = self.space.distances(self.space.point(batch, i), self.space.take(batch, np.asarray(cand)))
                if np.any(d < sep):
                    continue
            kept.append(i)
        return np.asarray(kept, dtype=np.int64)

    def nearest(self, net, probes) -> np.ndarray:
        """Distance from each probe to the net."""
        m = self.space.batch_len(probes)
        if self.space.batch_len(net) == 0:
            return np.full(m, np.inf)
        if self.euclid is not None:
            d, _ = cKDTree(self.coords(net)).query(self.coords(probes))
            return np.asarray(d) ** self.euclid
        out = np.full(m, np.inf)
        for j in range(self.space.batch_len(net)):
            out = np.minimum(out, self.space.distances(self.space.point(net, j), probes))
        return out

    def covered(self, net, probes, radius: float) -> np.ndarray:
        m = self.space.batch_len(probes)
        if self.space.batch_len(net) == 0 or m == 0:
            return np.zeros(m, dtype=bool)
        if self.euclid is not None:
            d, _ = cKDTree(self.coords(net)).query(self.coords(probes), distance_upper_bound=self.flat(radius))
            return np.isfinite(d)
        if self.prefilter:
            tree = cKDTree(self.coords(net))
            hits = tree.query_ball_point(self.coords(probes), radius)
            out = np.zeros(m, dtype=bool)
            for i, cand in enumerate(hits):
                if cand:
                    d = self.space.distances(self.space.point(probes, i), self.space.take(net, np.asarray(cand)))
                    out[i] = bool(np.any(d < radius))
            return out
        return self.nearest(net, probes) < radius

    def min_separation(self, net) -> float:
        n = self.space.batch_len(net)
        if n < 2:
            return math.inf
        if self.euclid is not None:
            d, _ = cKDTree(self.coords(net)).query(self.coords(net), k=2)
            return float(d[:, 1].min() ** self.euclid)
        best = math.inf
        for j in range(n - 1):
            rest = self.space.take(net, np.arange(j + 1, n))
            best = min(best, float(self.space.distances(self.space.point(net, j), rest).min()))
        return best

    def cross_min(self, a, b) -> float:
        if self.space.batch_len(a) == 0 or self.space.batch_len(b) == 0:
            return math.inf
        if self.euclid is not None:
            d, _ = cKDTree(self.coords(b)).query(self.coords(a))
            return float(np.min(d) ** self.euclid)
        return float(self.nearest(b, a).min())


def _region_probes(space: Space, x, r_in: float, r_out: float, n: int, rng, max_draws: int = 50) -> Any:
    """About n probes of B(x, r_out) \\ B(x, r_in); fewer, possibly none, if the region is thin."""
    parts, got = [], 0
    for _ in range(max_draws):
        if got >= n:
            break
        batch = space.sample_superset(x, r_out, n, rng)
        d = space.distances(x, batch)
        keep = np.flatnonzero((d >= r_in) & (d < r_out))
        if keep.size:
            parts.append(space.take(batch, keep))
            got += keep.size
    if not parts:
        return space.empty_batch()
    out = parts[0]
    for p in parts[1:]:
        out = space.concat(out, p)
    return out


def _grow_net(metric: _Metric, x, r_in, r_out, sep, budget, rng, max_rounds=MAX_ROUNDS, cover=None):
    """Greedy sep-separated net, topped up until a fresh probe set is within ``cover``.

    The fresh-probe budget doubles (up to 64x) after every round that finds a gap.
    """
    cover = sep if cover is None else cover
    space = metric.space
    probes = _region_probes(space, x, r_in, r_out, budget, rng)
    if space.batch_len(probes) == 0:
        return None, 0, False
    net = space.take(probes, metric.greedy(probes, sep))
    used = budget
    size = budget
    for _ in range(max_rounds):
        fresh = _region_probes(space, x, r_in, r_out, size, rng)
        used += size
        miss = np.flatnonzero(~metric.covered(net, fresh, cover))
        if miss.size == 0:
            return net, used, True
        joined = space.concat(net, space.take(fresh, miss))
        net = space.take(joined, metric.greedy(joined, sep))
        size = min(2 * size, 64 * budget)
    return net, used, False


# ---------------------------------------------------------------------------
# nets


@dataclass
class NetReport:
    points: Any
    separation: float
    covering_radius: float
    cardinality: int
    condition_I_params: tuple
    passed: bool
    probes_used: int = 0
    space: Space | None = field(default=None, repr=False)

    def to_json(self) -> str:
        x, l, r, eps = self.condition_I_params
        sp = self.space
        pts = [sp.point_to_json(sp.point(self.points, i)) for i in range(self.cardinality)] if sp else []
        return json.dumps({
            "points": pts, "separation": _finite(self.separation), "covering_radius": self.covering_radius,
            "cardinality": self.cardinality, "passed": self.passed, "probes_used": self.probes_used,
            "x": sp.point_to_json(x) if sp else None, "l": l, "r": r, "eps": eps,
        }, sort_keys=True)


def _finite(v):
    return v if math.isfinite(v) else None


def greedy_net(space: Space, x, l: float, r_scale: float, eps: float, probe_budget: int = 20000,
               rng: np.random.Generator | None = None, sigma: float | None = None) -> NetReport:
    """Net for condition (I) on the annulus B(x, sigma r_scale) \\ B(x, r_scale)."""
    if not (l > 0 and r_scale > 0):
        raise DomainError("l and r_scale must be positive")
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    sigma = space.sigma if sigma is None else sigma
    rng = rng if rng is not None else stream(0)
    metric = _Metric(space)
    sep = max(eps, NET_SLACK) * l
    net, used, stable = _grow_net(metric, x, r_scale, sigma * r_scale, sep, probe_budget, rng, cover=l)
    if net is None:
        raise GeometryError(f"annulus [{r_scale:g}, {sigma * r_scale:g}) around x looks empty; "
                            "the space is not uniformly perfect at this scale")
    sep = metric.min_separation(net)
    check = _region_probes(space, x, r_scale, sigma * r_scale, probe_budget, rng)
    cover = float(metric.nearest(net, check).max()) if space.batch_len(check) else 0.0
    passed = stable and sep >= eps * l and cover < l
    return NetReport(net, sep, cover, space.batch_len(net), (x, l, r_scale, eps), bool(passed), used, space)


def validate_net(report: NetReport, probe_budget: int, rng: np.random.Generator, sigma: float | None = None) -> bool:
    """Re-check both clauses with a fresh probe set."""
    space = report.space
    x, l, r, eps = report.condition_I_params
    sigma = space.sigma if sigma is None else sigma
    metric = _Metric(space)
    probes = _region_probes(space, x, r, sigma * r, probe_budget, rng)
    covered = bool(np.all(metric.covered(report.points, probes, l)))
    return covered and metric.min_separation(report.points) >= eps * l


def nets_K_L(space: Space, x, r: float, sigma: float | None = None, probe_budget: int = 20000,
             rng: np.random.Generator | None = None) -> tuple[NetReport, NetReport]:
    """K at scale 10 sigma^3 r and L at scale 80 sigma^4 r, both with l = r, eps = 1/5."""
    if not r > 0:
        raise DomainError("r must be positive")
    sigma = space.sigma if sigma is None else sigma
    rng = rng if rng is not None else stream(0)
    K = greedy_net(space, x, r, 10.0 * sigma**3 * r, 0.2, probe_budget, rng, sigma)
    L = greedy_net(space, x, r, 80.0 * sigma**4 * r, 0.2, probe_budget, rng, sigma)
    gap = _Metric(space).cross_min(K.points, L.points)
    if not gap > 20.0 * sigma**3 * r:
        raise GeometryError(f"dilated K and L balls overlap: cross distance {gap:g}")
    return K, L


# ---------------------------------------------------------------------------
# Ahlfors regularity


@dataclass
class AhlforsReport:
    s_hat: float
    C_hat: float
    intercept: float
    violations: list
    samples: int

    @property
    def passed(self) -> bool:
        return not self.violations


def _random_centers(space: Space, n: int, spread: float, rng) -> list:
    o = space.origin()
    return [space.sample_point(o, spread, rng) for _ in range(n)]


def check_ahlfors(space: Space, trials: int = 100, r_grid=None, rng: np.random.Generator | None = None,
                  spread: float = 10.0) -> AhlforsReport:
    """Least-squares slope of log mu(B(x, r)) against log r, plus sandwich violations."""
    if trials < 100:
        raise DomainError("use at least 100 trials")
    rng = rng if rng is not None else stream(0)
    r_grid = np.geomspace(1e-3, 1e3, 25) if r_grid is None else np.asarray(r_grid, dtype=float)
    xs, ys, ratios, violations = [], [], [], []
    per = max(1, math.ceil(trials / len(r_grid)))
    centers = _random_centers(space, per, spread, rng)
    count = 0
    for x in centers:
        for r in r_grid:
            m = space.ball_measure(x, float(r))
            lo, hi = (m.lower, m.upper) if hasattr(m, "lower") else (m, m)
            val = measure_value(m)
            rs = r**space.s
            xs.append(math.log(r))
            ys.append(math.log(val))
            ratios.append(max(val / rs, rs / val))
            if hi < rs / space.C_V * (1 - SANDWICH_RTOL) or lo > space.C_V * rs * (1 + SANDWICH_RTOL):
                violations.append((space.point_to_json(x), float(r), val))
            count += 1
    slope, intercept = np.polyfit(xs, ys, 1)
    return AhlforsReport(float(slope), float(max(ratios)), float(intercept), violations, count)


# ---------------------------------------------------------------------------
# uniform perfectness


@dataclass
class PerfectnessReport:
    passed: bool
    witness: tuple | None
    worst_tries: int
    trials: int


def check_uniformly_perfect(space: Space, sigma: float | None = None, trials: int = 100,
                            rng: np.random.Generator | None = None, budget: int = 10**5,
                            decades: tuple = (-3.0, 3.0), spread: float = 10.0) -> PerfectnessReport:
    """Look for a point of B(x, sigma r) \\ B(x, r) at random (x, r).

    Fails with the first (x, r) whose probe budget runs out.
    """
    sigma = space.sigma if sigma is None else sigma
    if not sigma > 1:
        raise DomainError("sigma must exceed 1")
    rng = rng if rng is not None else stream(0)
    worst, worst_at = 0, None
    for x in _random_centers(space, trials, spread, rng):
        r = 10.0 ** rng.uniform(*decades)
        tries = 0
        found = None
        while tries < budget and found is None:
            n = min(4096, budget - tries)
            tries += n
            probes = _region_probes(space, x, r, sigma * r, n, rng, max_draws=1)
            if space.batch_len(probes):
                found = probes
        if found is None:
            return PerfectnessReport(False, (space.point_to_json(x), r), tries, trials)
        if tries > worst:
            worst, worst_at = tries, (space.point_to_json(x), r)
    return PerfectnessReport(True, worst_at, worst, trials)


# ---------------------------------------------------------------------------
# covering numbers


DEFAULT_EPS = tuple(2.0**-k for k in range(1, 7))


@dataclass
class CoveringReport:
    counts: dict
    C: float
    net_exponent: float
    stable: bool

    def count(self, eps: float) -> int:
        return self.counts[eps]


def covering_count(space: Space, x, r: float, eps: float, probe_budget: int = 20000,
                   rng: np.random.Generator | None = None) -> tuple[int, bool]:
    """Size of a greedy maximal eps*r-separated set in B(x, r)."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    rng = rng if rng is not None else stream(0)
    net, _, stable = _grow_net(_Metric(space), x, 0.0, r, eps * r, probe_budget, rng)
    return (0 if net is None else space.batch_len(net)), stable


def covering_number(space: Space, x, r: float, eps_grid=DEFAULT_EPS, probe_budget: int = 20000,
                    rng: np.random.Generator | None = None) -> CoveringReport:
    """Counts on an eps grid and the fit count ~ C * eps ** (-net_exponent)."""
    if not r > 0:
        raise DomainError("r must be positive")
    rng = rng if rng is not None else stream(0)
    counts, stable = {}, True
    for eps in eps_grid:
        counts[eps], ok = covering_count(space, x, r, eps, probe_budget, rng)
        stable &= ok
    e = np.array(sorted(counts))
    n = np.array([counts[v] for v in e], dtype=float)
    slope, icpt = np.polyfit(np.log(1.0 / e), np.log(n), 1)
    return CoveringReport(counts, float(math.exp(icpt)), float(slope), bool(stable))


# ---------------------------------------------------------------------------
# reporting


@dataclass
class CheckResult:
    check: str
    passed: bool
    detail: str

    def as_row(self) -> tuple:
        return (self.check, int(self.passed), self.detail)


def summary_text(results: list[CheckResult]) -> str:
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.check}: {r.detail}" for r in results]
    ok = sum(r.passed for r in results)
    lines.append(f"{ok}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"


def summary_csv(results: list[CheckResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("check", "passed", "detail"))
    for r in results:
        w.writerow(r.as_row())
    return buf.getvalue()
