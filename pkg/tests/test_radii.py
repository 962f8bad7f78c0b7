import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from boolperc.errors import ConfigurationError, DomainError
from boolperc.radii import Dirac, Exponential, Pareto, ParetoTruncated, law_from_json, quad_tail_moment
from boolperc.sampler import stream


def oracle(pdf, s, lo, hi=math.inf):
    """Plain scipy quadrature of R^s pdf(R), independent of the library code."""
    val, _ = integrate.quad(lambda R: R**s * pdf(R), lo, hi, epsrel=1e-11, epsabs=0, limit=500)
    return val


def test_dirac_examples():
    law = Dirac(4.0)
    assert np.all(law.sample(stream(0), size=100) == 4.0)
    assert law.tail_moment(2, 2) == 16.0
    assert law.tail_moment(2, 4) == 0.0
    assert law.tail_moment(2, 4, closed=True) == 16.0
    assert Dirac(2.0).moment(3) == 8.0


def test_pareto_examples():
    assert Pareto(3.0).tail_moment(2, 1) == pytest.approx(oracle(lambda R: 3 * R**-4, 2, 1), rel=1e-10)
    assert Pareto(3.0).tail_moment(2, 1) == pytest.approx(3.0)
    assert Pareto(1.5).tail_moment(2, 7.0) == math.inf
    assert Pareto(2.0).moment(2) == math.inf
    assert Pareto(5.0).moment(2) == pytest.approx(oracle(lambda R: 5 * R**-6, 2, 1), rel=1e-10)
    assert Pareto(5.0).moment(2) == pytest.approx(5 / 3)


def test_exponential_moment():
    assert Exponential(1.0).moment(1) == pytest.approx(oracle(lambda R: math.exp(-R), 1, 0), rel=1e-10)
    assert Exponential(1.0).moment(1) == pytest.approx(1.0)


def test_pareto_mean_and_support():
    x = Pareto(3.0).sample(stream(1), size=100_000)
    se = math.sqrt(0.75) / math.sqrt(len(x))  # var = a/((a-1)^2 (a-2))
    assert abs(x.mean() - 1.5) < 3 * se
    y = ParetoTruncated(1.5, 10.0).sample(stream(2), size=100_000)
    assert y.min() >= 1.0 and y.max() <= 10.0


PDFS = {
    "pareto": (Pareto(4.5), lambda R: 4.5 * R**-5.5, 1.0, math.inf),
    "truncated": (ParetoTruncated(1.5, 50.0), lambda R: 1.5 * R**-2.5 / (1 - 50.0**-1.5), 1.0, 50.0),
    "exponential": (Exponential(0.7), lambda R: 0.7 * math.exp(-0.7 * R), 0.0, math.inf),
}


@pytest.mark.parametrize("name", sorted(PDFS))
def test_closed_forms_against_quadrature(name):
    law, pdf, lo, hi = PDFS[name]
    rng = np.random.default_rng(4)
    for _ in range(20):
        s = float(rng.uniform(0.5, 3.5))
        r = float(rng.uniform(0, 20))
        a = max(lo, r)
        expected = oracle(pdf, s, a, hi) if a < hi else 0.0
        got = law.tail_moment(s, r)
        assert got == pytest.approx(expected, rel=1e-6, abs=1e-300)
        assert quad_tail_moment(law, s, r) == pytest.approx(expected, rel=1e-6, abs=1e-300)


def test_truncated_equal_exponent():
    law = ParetoTruncated(2.0, 10.0)
    pdf = lambda R: 2 * R**-3 / (1 - 10.0**-2)  # noqa: E731
    assert law.tail_moment(2.0, 3.0) == pytest.approx(oracle(pdf, 2, 3.0, 10.0), rel=1e-9)


@pytest.mark.parametrize("law", [Pareto(5.0), Exponential(2.0), ParetoTruncated(1.2, 30.0), Dirac(1.5)],
                         ids=str)
def test_monte_carlo_moment(law):
    s = 1.5
    x = law.sample(stream(6), size=100_000) ** s
    assert abs(x.mean() - law.moment(s)) < 4 * x.std() / math.sqrt(len(x)) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 4.0), st.floats(0.0, 50.0), st.floats(0.0, 50.0))
def test_tail_nonincreasing(s, r1, r2):
    lo, hi = sorted((r1, r2))
    for law in (Pareto(4.2), ParetoTruncated(1.5, 20.0), Exponential(0.5), Dirac(3.0)):
        assert law.tail_moment(s, hi) <= law.tail_moment(s, lo) * (1 + 1e-12)


def test_validation():
    with pytest.raises(ConfigurationError):
        Pareto(-1.0)
    with pytest.raises(ConfigurationError):
        ParetoTruncated(1.5, 0.5)
    with pytest.raises(DomainError):
        Pareto(3.0).tail_moment(0.0, 1.0)
    with pytest.raises(DomainError):
        Pareto(3.0).tail_moment(2.0, -1.0)


def test_json_roundtrip():
    for law in (Dirac(4.0), Pareto(3.0), ParetoTruncated(1.5, 100.0), Exponential(2.0)):
        assert law_from_json(law.to_json()) == law
        assert law.describe()
    with pytest.raises(ConfigurationError):
        law_from_json({"kind": "lognormal"})
