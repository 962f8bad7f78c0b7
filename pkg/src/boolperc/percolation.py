"""Clustering and event detection on a single realization."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np

from .errors import CoverageError, DomainError
from .sampler import BooleanSample
from .spaces import Space
from .theory import tau

REPORT_COLUMNS = ("anchor_id", "m_value", "censored", "component_size", "envelope_flag")


def component_labels(space: Space, sample: BooleanSample) -> np.ndarray:
    """Label of each germ: the smallest germ index of its component."""
    if len(sample) == 0:
        return np.empty(0, dtype=np.int64)
    return np.asarray(space.labels(sample.centers, sample.radii), dtype=np.int64)


def connected_components(space: Space, sample: BooleanSample) -> list[list[int]]:
    """Partition of germ indices into percolative-chain classes, sorted."""
    labels = component_labels(space, sample)
    groups: dict[int, list[int]] = {}
    for i, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(i)
    return sorted(groups.values())


@dataclass(frozen=True)
class ClusterReport:
    anchor: Any
    m_value: float
    censored: bool
    component_size: int
    envelope_flag: bool
    component_id: int = -1

    def csv_row(self, anchor_id: int) -> tuple:
        return (anchor_id, repr(float(self.m_value)), int(self.censored), self.component_size, int(self.envelope_flag))

    def to_json(self, space: Space) -> str:
        doc = asdict(self)
        doc["anchor"] = space.point_to_json(self.anchor)
        return json.dumps(doc, sort_keys=True)


def cluster_radius(space: Space, sample: BooleanSample, anchor, labels: np.ndarray | None = None,
                   influence_tol: float = 0.0) -> ClusterReport:
    """M(anchor): sup distance from the anchor over its cluster (0 if uncovered).

    A report is censored when a cluster ball reaches the halo boundary, or
    when germs outside the halo could matter (unbounded law with
    ``influence_bound > influence_tol``).
    """
    outside_risk = (not sample.law.bounded) and sample.influence_bound > influence_tol
    if len(sample) == 0:
        return ClusterReport(anchor, 0.0, bool(outside_risk), 0, space.envelope)
    d = space.distances(anchor, sample.centers)
    covering = np.flatnonzero(d < sample.radii)
    if covering.size == 0:
        return ClusterReport(anchor, 0.0, bool(outside_risk), 0, space.envelope)
    if labels is None:
        labels = component_labels(space, sample)
    comp = labels[covering[0]]
    members = np.flatnonzero(labels == comp)
    m = float(np.max(space.sup_rule(d[members], sample.radii[members])))
    reach = space.sup_distances(sample.window_center, space.take(sample.centers, members), sample.radii[members])
    censored = bool(np.any(reach >= sample.halo_radius)) or outside_risk
    return ClusterReport(anchor, m, censored, int(members.size), space.envelope, int(comp))


# ---------------------------------------------------------------------------
# events


def _check_r(r):
    if not r > 0:
        raise DomainError("r must be positive")


def require_coverage(space: Space, sample: BooleanSample, x, radius: float):
    """Raise unless B(x, radius) lies inside the sampled halo ball."""
    if space.ball_sup_distance(sample.window_center, x, radius) > sample.halo_radius:
        raise CoverageError(
            f"halo radius {sample.halo_radius:g} does not cover B(x, {radius:g}); enlarge the window")


def event_G(space: Space, sample: BooleanSample, x, r: float, sigma: float, check: bool = True) -> bool:
    """B(x, r) and the annulus [8 sigma r, 9 sigma^2 r) joined by germs centred in B(x, 10 sigma^3 r)."""
    _check_r(r)
    outer = 10.0 * sigma**3 * r
    if check:
        require_coverage(space, sample, x, outer)
    if len(sample) == 0:
        return False
    d = space.distances(x, sample.centers)
    idx = np.flatnonzero(d < outer)
    if idx.size == 0:
        return False
    centers = space.take(sample.centers, idx)
    radii = sample.radii[idx]
    touch_inner = space.intersect_rule(d[idx], r, radii)
    if not touch_inner.any():
        return False
    touch_ring = space.meets_annulus(x, 8.0 * sigma * r, 9.0 * sigma**2 * r, centers, radii)
    if not touch_ring.any():
        return False
    if (touch_inner & touch_ring).any():
        return True
    labels = np.asarray(space.labels(centers, radii))
    return bool(np.intersect1d(labels[touch_inner], labels[touch_ring]).size)


def event_H(space: Space, sample: BooleanSample, x, r: float, sigma: float) -> bool:
    """Some germ outside B(x, 10 sigma^3 r) with R > d(x, y) / (10 tau)."""
    _check_r(r)
    if len(sample) == 0:
        return False
    d = space.distances(x, sample.centers)
    far = d >= 10.0 * sigma**3 * r
    return bool(np.any(far & (sample.radii > d / (10.0 * tau(sigma)))))


def event_Htilde(space: Space, sample: BooleanSample, x, r: float, sigma: float) -> bool:
    """Some germ inside B(x, 100 sigma^6 r) with R >= r."""
    _check_r(r)
    if len(sample) == 0:
        return False
    d = space.distances(x, sample.centers)
    return bool(np.any((d < 100.0 * sigma**6 * r) & (sample.radii >= r)))


def single_ball_covers(space: Space, sample: BooleanSample, o, r: float) -> bool:
    """Some germ with d(o, y) < R - r, which forces B(o, r) inside B(y, R)."""
    _check_r(r)
    if len(sample) == 0:
        return False
    d = space.distances(o, sample.centers)
    return bool(np.any(d < sample.radii - r))
