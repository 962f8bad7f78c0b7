import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as cc_oracle

from boolperc import verify
from boolperc.errors import CoverageError, DomainError
from boolperc.percolation import (cluster_radius, component_labels, connected_components, event_G, event_H,
                                  event_Htilde, single_ball_covers)
from boolperc.radii import Dirac, Pareto
from boolperc.sampler import BooleanSample, sample_boolean_model, stream
from boolperc.spaces import DyadicSpace, EuclideanSpace
from boolperc.theory import tau

E1, E2 = EuclideanSpace(1), EuclideanSpace(2)


def make(space, centers, radii, halo=1e4, law=None):
    centers = np.asarray(centers, dtype=float).reshape(len(radii), -1) if len(radii) else np.empty((0, space.dim))
    return BooleanSample(space, 1.0, law or Dirac(1.0), space.origin(), 1.0, halo, centers,
                         np.asarray(radii, dtype=float))


def oracle_partition(centers, radii):
    d = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
    adj = d < radii[:, None] + radii[None, :]
    n, lab = cc_oracle(coo_matrix(adj), directed=False)
    groups = {}
    for i, g in enumerate(lab):
        groups.setdefault(g, []).append(i)
    return sorted(groups.values())


# ---- components -------------------------------------------------------

def test_component_examples():
    assert connected_components(E1, make(E1, [0, 1.5], [1, 1])) == [[0, 1]]
    assert connected_components(E1, make(E1, [0, 3], [1, 1])) == [[0], [1]]
    # A-B-C chain with A and C disjoint
    assert connected_components(E1, make(E1, [0, 1.8, 3.6], [1, 1, 1])) == [[0, 1, 2]]
    assert connected_components(E1, make(E1, [], [])) == []


def test_tangent_balls_do_not_touch():
    # open balls: d == r1 + r2 leaves them disjoint
    assert connected_components(E1, make(E1, [0, 2], [1, 1])) == [[0], [1]]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 60), st.integers(0, 2**32 - 1), st.sampled_from(["dirac", "pareto"]))
def test_components_match_scipy_oracle(n, seed, law):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-10, 10, size=(n, 2))
    radii = np.full(n, 1.2) if law == "dirac" else rng.pareto(1.5, size=n) * 0.5 + 0.1
    got = connected_components(E2, make(E2, centers, radii))
    assert got == (oracle_partition(centers, radii) if n else [])


def test_large_sample_matches_oracle():
    smp = sample_boolean_model(E2, 1.0, Pareto(2.5), E2.origin(), 15.0, seed=3)
    assert connected_components(E2, smp) == oracle_partition(smp.centers, smp.radii)


# ---- cluster radius ---------------------------------------------------

def test_cluster_radius_examples():
    o = E1.origin()
    rep = cluster_radius(E1, make(E1, [], []), o)
    assert (rep.m_value, rep.censored) == (0.0, False)
    assert cluster_radius(E1, make(E1, [3], [1]), o).m_value == 0.0
    rep = cluster_radius(E1, make(E1, [0, 3], [2, 2]), o)
    assert rep.m_value == 5.0 and rep.component_size == 2 and not rep.censored


def test_censoring_at_halo():
    rep = cluster_radius(E1, make(E1, [0, 3], [2, 2], halo=4.0), E1.origin())
    assert rep.censored and rep.m_value == 5.0


def test_unbounded_law_censors_when_influence_large():
    smp = make(E1, [0], [2], law=Pareto(3.0))
    smp.influence_bound = 0.2
    assert cluster_radius(E1, smp, E1.origin(), influence_tol=1e-3).censored
    assert not cluster_radius(E1, smp, E1.origin(), influence_tol=0.5).censored


def test_report_serialization():
    rep = cluster_radius(E1, make(E1, [0, 3], [2, 2]), E1.origin())
    assert rep.csv_row(7) == (7, "5.0", 0, 2, 0)
    doc = json.loads(rep.to_json(E1))
    assert doc["anchor"] == [0.0] and doc["m_value"] == 5.0


def test_dyadic_cluster_radius():
    D = DyadicSpace()
    smp = BooleanSample(D, 1.0, Dirac(16.0), D.origin(), 1.0, 1e6, [D.make_point([3])], np.array([16.0]))
    # origin lies in B(c, 16); sup over the ball is pred(16) = 8
    assert cluster_radius(D, smp, D.origin()).m_value == 8.0


# ---- events -----------------------------------------------------------

SIG = 2.0


def test_event_G_examples():
    o = E2.origin()
    assert not event_G(E2, make(E2, [], [], halo=200), o, 1.0, SIG)
    assert event_G(E2, make(E2, [[0, 0]], [9 * SIG**2], halo=200), o, 1.0, SIG)
    assert not event_G(E2, make(E2, [[85, 0]], [1000.0], halo=200), o, 1.0, SIG)


def test_event_G_needs_chain():
    o = E2.origin()
    # a chain of unit-spaced balls from the origin out to radius 20 crosses [16, 36)
    xs = np.arange(0, 21, 1.5)
    smp = make(E2, np.c_[xs, np.zeros_like(xs)], np.full(xs.size, 1.0), halo=200)
    assert event_G(E2, smp, o, 1.0, SIG)
    gap = np.delete(np.c_[xs, np.zeros_like(xs)], 5, axis=0)
    assert not event_G(E2, make(E2, gap, np.full(len(gap), 1.0), halo=200), o, 1.0, SIG)


def test_event_G_coverage_error():
    with pytest.raises(CoverageError):
        event_G(E2, make(E2, [], [], halo=50), E2.origin(), 1.0, SIG)
    with pytest.raises(DomainError):
        event_G(E2, make(E2, [], []), E2.origin(), 0.0, SIG)


def test_event_H_examples():
    o = E2.origin()
    d = 20 * SIG**3
    R = d / (10 * tau(SIG)) * 1.01
    assert not event_H(E2, make(E2, [], []), o, 1.0, SIG)
    assert event_H(E2, make(E2, [[d, 0]], [R]), o, 1.0, SIG)
    assert not event_H(E2, make(E2, [[d, 0]], [d / (10 * tau(SIG))]), o, 1.0, SIG)
    assert not event_H(E2, make(E2, [[10, 0]], [1e9]), o, 1.0, SIG)


def test_event_Htilde_examples():
    o = E2.origin()
    assert not event_Htilde(E2, make(E2, [], []), o, 1.0, SIG)
    assert event_Htilde(E2, make(E2, [[50 * SIG**6, 0]], [1.0]), o, 1.0, SIG)
    assert not event_Htilde(E2, make(E2, [[1, 0]], [0.99]), o, 1.0, SIG)


def test_single_ball_covers_examples():
    o = E2.origin()
    assert single_ball_covers(E2, make(E2, [[0, 0]], [2.0]), o, 1.0)
    assert not single_ball_covers(E2, make(E2, [[1, 0]], [1.5]), o, 1.0)
    assert not single_ball_covers(E2, make(E2, [], []), o, 1.0)


# ---- invariants -------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_adding_a_germ_is_monotone(n, seed):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-30, 30, size=(n, 2))
    radii = rng.pareto(1.2, size=n) + 0.5
    base = make(E2, centers, radii, halo=1e4)
    extra = make(E2, np.vstack([centers, rng.uniform(-30, 30, size=(1, 2))]),
                 np.append(radii, rng.pareto(1.2) + 0.5), halo=1e4)
    o = E2.origin()
    assert cluster_radius(E2, extra, o).m_value >= cluster_radius(E2, base, o).m_value
    lab0, lab1 = component_labels(E2, base), component_labels(E2, extra)[:n]
    for i in range(n):
        for j in range(i + 1, n):
            if lab0[i] == lab0[j]:
                assert lab1[i] == lab1[j]
    for ev in (event_G, event_H, event_Htilde):
        if ev(E2, base, o, 1.0, SIG):
            assert ev(E2, extra, o, 1.0, SIG)


def test_inclusion_small_batch():
    # {M > 9 sigma^2 r} inside G or H on uncensored samples (the full 10^4 run is acceptance criterion 4)
    o = E2.origin()
    r = 0.2
    checked = 0
    for i in range(500):
        smp = sample_boolean_model(E2, 0.25, Dirac(1.0), o, 10.0, halo_factor=3.0, seed=21, stream_index=i)
        rep = cluster_radius(E2, smp, o)
        if rep.censored or rep.m_value <= 9 * SIG**2 * r:
            continue
        checked += 1
        assert event_G(E2, smp, o, r, SIG) or event_H(E2, smp, o, r, SIG)
    assert checked > 50


def test_K_L_inclusion():
    # G(x, 10 s^3 r) without H~(x, r) forces G at some K point and some L point
    sigma, r = 1.1, 1.0
    space = EuclideanSpace(2, sigma=sigma)
    o = space.origin()
    K, L = verify.nets_K_L(space, o, r, rng=stream(11))
    law = Dirac(0.9)  # radii below r, so H~(x, r) never happens
    seen = 0
    for i in range(6):
        smp = sample_boolean_model(space, 0.6, law, o, 200.0, halo_factor=1.0, seed=31, stream_index=i)
        if not event_G(space, smp, o, 10 * sigma**3 * r, sigma):
            continue
        assert not event_Htilde(space, smp, o, r, sigma)
        seen += 1
        hit_K = any(event_G(space, smp, space.point(K.points, j), r, sigma) for j in range(K.cardinality))
        hit_L = any(event_G(space, smp, space.point(L.points, j), r, sigma) for j in range(L.cardinality))
        assert hit_K and hit_L
    assert seen >= 3
