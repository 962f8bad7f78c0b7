import json
import math

import numpy as np
import pytest

from boolperc import verify
from boolperc.errors import DomainError, GeometryError
from boolperc.sampler import stream
from boolperc.spaces import DiscreteSpace, DyadicSpace, EuclideanSpace

E1 = EuclideanSpace(1)


def test_real_line_net():
    rep = verify.greedy_net(E1, E1.origin(), 0.5, 1.0, 0.2, rng=stream(1))
    pts = np.sort(rep.points[:, 0])
    assert rep.passed
    assert rep.cardinality <= 22
    assert np.min(np.diff(pts)) >= 0.1
    # exhaustive 1e-3 grid over [1, 2) and (-2, -1]
    grid = np.arange(1.0, 2.0, 1e-3)
    grid = np.concatenate([grid, -grid])
    assert np.all(np.min(np.abs(grid[:, None] - pts[None, :]), axis=1) < 0.5)
    assert rep.condition_I_params[1:] == (0.5, 1.0, 0.2)
    doc = json.loads(rep.to_json())
    assert doc["cardinality"] == rep.cardinality


def test_net_near_unit_eps_terminates():
    rep = verify.greedy_net(E1, E1.origin(), 0.5, 1.0, 0.999, rng=stream(2))
    assert rep.cardinality >= 2 and rep.separation >= 0.999 * 0.5


@pytest.mark.parametrize("l, expected", [(2.0, 4), (4.0, 2)])
def test_dyadic_net_counts_cylinders(l, expected):
    # annulus [1, 8) around 0 is the union of the shells at 1, 2, 4; an open
    # l-ball is a cylinder, shell 2^j (>= l) splits into 2^j / l of them and
    # all shells below l sit in B(0, l)
    D = DyadicSpace()
    rep = verify.greedy_net(D, D.origin(), l, 1.0, 0.2, rng=stream(3), sigma=8.0)
    assert rep.passed
    assert rep.cardinality == expected


def test_empty_annulus_raises():
    # two points at distance 1: B(x, 4) minus B(x, 2) is empty
    with pytest.raises(GeometryError):
        verify.greedy_net(DiscreteSpace([0.0, 1.0]), DiscreteSpace().origin(), 1.0, 2.0, 0.2, rng=stream(4))


def test_net_argument_checks():
    with pytest.raises(DomainError):
        verify.greedy_net(E1, E1.origin(), 0.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        verify.greedy_net(E1, E1.origin(), -0.5, 1.0, 0.2)


def test_revalidation_with_fresh_probes():
    sp = EuclideanSpace(2, sigma=1.5)
    rep = verify.greedy_net(sp, sp.origin(), 1.0, 5.0, 0.2, rng=stream(5))
    assert rep.passed
    assert verify.validate_net(rep, 10 * 20_000, stream(6))


def test_K_scale_invariance():
    sigma = 1.1
    sp = EuclideanSpace(2, sigma=sigma)
    sizes = {verify.greedy_net(sp, sp.origin(), r, 10 * sigma**3 * r, 0.2, rng=stream(7)).cardinality
             for r in 10.0 ** np.arange(-2, 3)}
    assert len(sizes) == 1


def test_K_L_disjoint_random():
    sp = EuclideanSpace(1)
    rng = np.random.default_rng(8)
    for i in range(100):
        x = sp.make_point(float(rng.uniform(-100, 100)))
        r = float(10 ** rng.uniform(-2, 1))
        K, L = verify.nets_K_L(sp, x, r, rng=stream(9, i))
        assert verify._Metric(sp).cross_min(K.points, L.points) > 20 * sp.sigma**3 * r


def test_K_against_covering_fit():
    sigma = 1.1
    sp = EuclideanSpace(2, sigma=sigma)
    cov = verify.covering_number(sp, sp.origin(), 1.0, eps_grid=(1 / 2, 1 / 4, 1 / 8, 1 / 16), rng=stream(10))
    K = verify.greedy_net(sp, sp.origin(), 1.0, 10 * sigma**3, 0.2, rng=stream(11))
    assert K.cardinality <= cov.C * (50 * sigma**4) ** cov.net_exponent


def test_ahlfors_fits():
    e = verify.check_ahlfors(EuclideanSpace(2), rng=stream(12))
    assert abs(e.s_hat - 2) < 1e-6 and e.passed
    d = verify.check_ahlfors(DyadicSpace(), rng=stream(13))
    assert abs(d.s_hat - 1) < 0.02 and d.C_hat <= 2 and d.passed
    with pytest.raises(DomainError):
        verify.check_ahlfors(DyadicSpace(), trials=10)


def test_uniform_perfectness():
    assert verify.check_uniformly_perfect(EuclideanSpace(2), 1.2, rng=stream(14)).passed
    assert verify.check_uniformly_perfect(DyadicSpace(), 2.0, rng=stream(15)).passed
    rep = verify.check_uniformly_perfect(DiscreteSpace([0.0, 1.0]), 2.0, rng=stream(16))
    assert not rep.passed and rep.witness is not None


def test_covering_counts():
    n, stable = verify.covering_count(E1, E1.origin(), 1.0, 0.5, rng=stream(17))
    assert n <= 5 and stable
    cov = verify.covering_number(EuclideanSpace(2), EuclideanSpace(2).origin(), 1.0,
                                 eps_grid=(1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32), rng=stream(18))
    assert abs(cov.net_exponent - 2) < 0.2
    eps = sorted(cov.counts)
    assert all(cov.counts[a] >= cov.counts[b] for a, b in zip(eps, eps[1:]))


def test_summary_outputs():
    res = [verify.CheckResult("ahlfors", True, "s=2"), verify.CheckResult("perfect", False, "witness")]
    text = verify.summary_text(res)
    assert text.splitlines()[-1] == "1/2 checks passed"
    assert "FAIL  perfect: witness" in text
    assert verify.summary_csv(res).splitlines() == ["check,passed,detail", "ahlfors,1,s=2", "perfect,0,witness"]


def test_dyadic_uniform_perfect_by_enumeration():
    # every shell 2^k is nonempty: flipping digit k gives a point at distance exactly 2^k
    D = DyadicSpace()
    x = D.make_point([0, 2, 5])
    for k in range(-10, 10):
        y = D.make_point(set(x.digits) ^ {k})
        assert D.distance(x, y) == math.ldexp(1.0, k)
