"""Radius distributions with inverse-CDF sampling and tail moments.

``tail_moment(s, r)`` is the integral of R**s against the law over (r, inf)
(or [r, inf) with ``closed=True``).  A divergent integral is returned as
``math.inf``; callers treat it as a value, never as an error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError, DomainError

INF = math.inf


@dataclass(frozen=True)
class RadiusLaw:
    kind = "abstract"

    # subclasses: quantile, cdf, pdf, _tail_closed_form, sup_support, to_json, describe

    def sample(self, rng: np.random.Generator, size=None, u_max: float = 1.0):
        """Inverse-CDF draws; ``u_max < 1`` conditions on R <= quantile(u_max)."""
        u = rng.random(size) * u_max
        return self.quantile(u)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup_support)

    def tail_moment(self, s: float, r: float, closed: bool = False) -> float:
        if not s > 0:
            raise DomainError("moment exponent must be positive")
        if r < 0:
            raise DomainError("r must be >= 0")
        val = self._tail_closed_form(s, r, closed)
        if val is None:
            val = quad_tail_moment(self, s, r)
        return val

    def moment(self, s: float) -> float:
        return self.tail_moment(s, 0.0)

    def _tail_closed_form(self, s, r, closed):
        return None


@dataclass(frozen=True)
class Dirac(RadiusLaw):
    R0: float
    kind = "dirac"

    def __post_init__(self):
        _positive(R0=self.R0)

    @property
    def sup_support(self):
        return self.R0

    def quantile(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.R0) if np.ndim(u) else float(self.R0)

    def cdf(self, x):
        return np.where(np.asarray(x) >= self.R0, 1.0, 0.0)

    def pdf(self, x):
        raise DomainError("a point mass has no density")

    def _tail_closed_form(self, s, r, closed):
        hit = r <= self.R0 if closed else r < self.R0
        return self.R0**s if hit else 0.0

    def to_json(self):
        return {"kind": self.kind, "R0": self.R0}

    def describe(self):
        return f"delta_{self.R0:g}"


@dataclass(frozen=True)
class Pareto(RadiusLaw):
    """Density a R**(-a-1) on [1, inf)."""

    a: float
    kind = "pareto"

    def __post_init__(self):
        _positive(a=self.a)

    sup_support = INF

    def quantile(self, u):
        return (1.0 - np.asarray(u, dtype=float)) ** (-1.0 / self.a)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, 0.0, 1.0 - np.maximum(x, 1.0) ** (-self.a))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 1.0, 0.0, self.a * np.maximum(x, 1.0) ** (-self.a - 1.0))

    def _tail_closed_form(self, s, r, closed):
        if self.a <= s:
            return INF
        return self.a / (self.a - s) * max(r, 1.0) ** (s - self.a)

    def to_json(self):
        return {"kind": self.kind, "a": self.a}

    def describe(self):
        return f"Pareto(a={self.a:g}, x_min=1)"


@dataclass(frozen=True)
class ParetoTruncated(RadiusLaw):
    """Pareto(a) conditioned on R <= T."""

    a: float
    T: float
    kind = "pareto_truncated"

    def __post_init__(self):
        _positive(a=self.a, T=self.T)
        if not self.T > 1.0:
            raise ConfigurationError("truncation cap must exceed x_min = 1")

    @property
    def sup_support(self):
        return self.T

    @property
    def _z(self):
        return 1.0 - self.T ** (-self.a)

    def quantile(self, u):
        return (1.0 - np.asarray(u, dtype=float) * self._z) ** (-1.0 / self.a)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 1.0, self.T)
        return (1.0 - x ** (-self.a)) / self._z

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 1.0) & (x <= self.T)
        return np.where(inside, self.a * np.clip(x, 1.0, None) ** (-self.a - 1.0) / self._z, 0.0)

    def _tail_closed_form(self, s, r, closed):
        lo = max(r, 1.0)
        if lo >= self.T:
            return 0.0
        if self.a == s:
            return self.a * math.log(self.T / lo) / self._z
        return self.a / (s - self.a) * (self.T ** (s - self.a) - lo ** (s - self.a)) / self._z

    def to_json(self):
        return {"kind": self.kind, "a": self.a, "T": self.T}

    def describe(self):
        return f"Pareto(a={self.a:g}, x_min=1, cap={self.T:g})"


@dataclass(frozen=True)
class Exponential(RadiusLaw):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        _positive(rate=self.rate)

    sup_support = INF

    def quantile(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def cdf(self, x):
        return 1.0 - np.exp(-self.rate * np.maximum(np.asarray(x, dtype=float), 0.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 0.0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)))

    def _tail_closed_form(self, s, r, closed):
        # upper incomplete gamma: Gamma(s+1, rate r) / rate**s
        return float(special.gammaincc(s + 1.0, self.rate * r) * special.gamma(s + 1.0) / self.rate**s)

    def to_json(self):
        return {"kind": self.kind, "rate": self.rate}

    def describe(self):
        return f"Exp(rate={self.rate:g})"


def _positive(**params):
    for name, v in params.items():
        if not (v > 0 and math.isfinite(v)):
            raise ConfigurationError(f"{name} must be positive and finite, got {v}")


def quad_tail_moment(law: RadiusLaw, s: float, r: float, rtol: float = 1e-8) -> float:
    """Tail moment by adaptive quadrature of R**s * pdf(R) over (r, sup)."""
    if isinstance(law, Dirac):
        return law.R0**s if r < law.R0 else 0.0
    lo = max(r, 1.0) if isinstance(law, (Pareto, ParetoTruncated)) else r
    hi = law.sup_support
    if lo >= hi:
        return 0.0
    f = lambda R: R**s * float(law.pdf(R))  # noqa: E731
    if math.isinf(hi):
        # split so the infinite piece starts where the density is smooth
        mid = lo + 1.0
        a, _ = integrate.quad(f, lo, mid, epsrel=rtol, epsabs=0, limit=400)
        b, _ = integrate.quad(f, mid, INF, epsrel=rtol, epsabs=0, limit=400)
        val = a + b
    else:
        val, _ = integrate.quad(f, lo, hi, epsrel=rtol, epsabs=0, limit=400)
    return val


def law_from_json(desc: dict) -> RadiusLaw:
    if not isinstance(desc, dict):
        raise ConfigurationError(f"law descriptor must be an object: {desc!r}")
    kind = desc.get("kind")
    try:
        if kind == "dirac":
            return Dirac(float(desc["R0"]))
        if kind == "pareto":
            if "T" in desc:
                return ParetoTruncated(float(desc["a"]), float(desc["T"]))
            return Pareto(float(desc["a"]))
        if kind == "pareto_truncated":
            return ParetoTruncated(float(desc["a"]), float(desc["T"]))
        if kind == "exponential":
            return Exponential(float(desc["rate"]))
    except KeyError as exc:
        raise ConfigurationError(f"law {kind!r} missing parameter {exc}") from None
    raise ConfigurationError(f"unknown radius law {kind!r}")
