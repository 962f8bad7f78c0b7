"""Closed-form bounds, constants, identities and the recursion machine.

Every probability bound is returned clamped to [0, 1]; the unclamped value
is kept alongside so monotonicity can be tested.  Divergent tail integrals
are ``math.inf`` and make the corresponding bound 1 (flagged).
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import BoolpercError, DomainError, UsageError
from .radii import Dirac, RadiusLaw

INF = math.inf


def tau(sigma: float) -> float:
    if not sigma >= 1:
        raise DomainError("sigma must be >= 1")
    return sigma / (10.0 * sigma - 9.0)


def _clamp(x: float) -> float:
    return 1.0 if (math.isinf(x) or x > 1.0) else max(0.0, x)


@dataclass(frozen=True)
class Bound:
    value: float
    raw: float

    @property
    def flagged(self) -> bool:
        return math.isinf(self.raw)


@dataclass(frozen=True)
class EventBounds:
    g: Bound
    h: Bound
    htilde: Bound

    def values(self) -> tuple:
        return self.g.value, self.h.value, self.htilde.value


def _mul(coef: float, tail: float) -> float:
    if math.isinf(tail):
        return INF
    return coef * tail


def g_bound_raw(lam, C_V, s, sigma, r):
    return (10.0 * sigma**3) ** s * lam * C_V * r**s


def h_bound_raw(lam, C_V, s, sigma, law, r):
    t = tau(sigma)
    return _mul((10.0 * t) ** s * lam * C_V, law.tail_moment(s, sigma**3 * r / t))


def htilde_bound_raw(lam, C_V, s, sigma, law, r):
    # the event asks R >= r, so the tail includes an atom at r
    return _mul((100.0 * sigma**6) ** s * lam * C_V, law.tail_moment(s, r, closed=True))


def event_bounds(lam: float, C_V: float, s: float, sigma: float, law: RadiusLaw, r: float) -> EventBounds:
    if min(lam, C_V, s, sigma, r) <= 0:
        raise DomainError("all parameters must be positive")
    g = g_bound_raw(lam, C_V, s, sigma, r)
    h = h_bound_raw(lam, C_V, s, sigma, law, r)
    ht = htilde_bound_raw(lam, C_V, s, sigma, law, r)
    return EventBounds(Bound(_clamp(g), g), Bound(_clamp(h), h), Bound(_clamp(ht), ht))


def combine_envelope(C1: float, p: float, htilde: float) -> float:
    return _clamp(C1 * p * p + htilde)


def scaling_envelope(lam, C_V, s, sigma, law, C1, p, r) -> float:
    """Certified bound on sup_x P(G(x, 10 sigma^3 r)) given p >= sup_x P(G(x, r))."""
    if not 0 <= p <= 1:
        raise DomainError("p must be a probability")
    return combine_envelope(C1, p, htilde_bound_raw(lam, C_V, s, sigma, law, r))


def cluster_tail_envelope(lam, C_V, s, sigma, law, g_sup, r) -> float:
    """Bound on sup_x P(M(x) > 9 sigma^2 r) given g_sup >= sup_x P(G(x, r))."""
    if not 0 <= g_sup <= 1:
        raise DomainError("g_sup must be a probability")
    return _clamp(g_sup + h_bound_raw(lam, C_V, s, sigma, law, r))


class Signal(enum.Enum):
    NO_SUBCRITICAL = "no-subcritical"


NO_SUBCRITICAL = Signal.NO_SUBCRITICAL


def lambda0(C1: float, C_V: float, s: float, sigma: float, law: RadiusLaw):
    """Largest intensity for which both hypotheses of the recursive inequality are guaranteed.

    With f = C1 * g_bound on [1, 10 sigma^3] and g = C1 * htilde_bound this
    is min(1 / (2 C1 C_V (10 sigma^3)^(2s)), 1 / (4 C1 C_V (100 sigma^6)^s m_s)).
    """
    m = law.moment(s)
    if math.isinf(m):
        return NO_SUBCRITICAL
    first = 1.0 / (2.0 * C1 * C_V * (10.0 * sigma**3) ** (2.0 * s))
    second = 1.0 / (4.0 * C1 * C_V * (100.0 * sigma**6) ** s * m)
    return min(first, second)


# ---------------------------------------------------------------------------
# recursive inequality


HYP_RTOL = 1e-12  # rounding slack when a hypothesis holds with equality


class CertificateRefused(BoolpercError):
    def __init__(self, message, witness):
        super().__init__(message)
        self.witness = witness


@dataclass
class Certificate:
    c: float
    grid: np.ndarray
    envelope: np.ndarray
    g_values: np.ndarray
    decays: bool
    theta: float | None = None
    theta_integrable: bool | None = None
    terms: np.ndarray | None = None

    def envelope_at(self, r: float) -> float:
        k = int(np.argmin(np.abs(np.log(self.grid / r))))
        return float(self.envelope[k])


def _as_fn(v) -> Callable[[float], float]:
    return v if callable(v) else (lambda r, _v=float(v): _v)


def recursion_certify(f0, g, c: float, theta: float | None = None, r1: float = 1.0, scales: int = 12,
                      base_checks: int = 64) -> Certificate:
    """Iterate F_k(r) = F_{k-1}(r / 10c)^2 + g(r) along r_k = (10c)^k r1.

    ``f0`` bounds f on [1, 10c] (number or callable), ``g`` is a callable.
    Raises :class:`CertificateRefused` with the offending point if
    f0 > 1/2 somewhere on the base interval or g > 1/4 at a checked point.
    """
    if not c > 1:
        raise DomainError("c must exceed 1")
    step = 10.0 * c
    if not 1.0 <= r1 <= step:
        raise DomainError("r1 must lie in [1, 10c]")
    f0, g = _as_fn(f0), _as_fn(g)
    base = np.geomspace(1.0, step, base_checks)
    for r in base:
        if f0(r) > 0.5 * (1.0 + HYP_RTOL):
            raise CertificateRefused("hypothesis (a) fails: f > 1/2 on [1, 10c]", float(r))
    grid = r1 * step ** np.arange(scales + 1, dtype=np.float64)
    for r in np.concatenate([base, grid]):
        if g(r) > 0.25 * (1.0 + HYP_RTOL):
            raise CertificateRefused("hypothesis (a) fails: g > 1/4", float(r))
    gv = np.array([g(r) for r in grid])
    env = np.empty(scales + 1)
    env[0] = min(0.5, f0(r1))
    for k in range(1, scales + 1):
        env[k] = env[k - 1] ** 2 + gv[k]
    g_vanishes = gv[-1] <= 1e-3 * max(gv[0], 1e-300) or gv[-1] == 0.0
    decays = bool(g_vanishes and env[-1] <= max(2.0 * gv[-1], 1e-12))
    cert = Certificate(c, grid, env, gv, decays)
    if theta is not None:
        widths = np.diff(np.append(grid, grid[-1] * step))
        terms = grid ** (theta - 1.0) * env * widths
        tail = terms[-11:]
        ratios = tail[1:] / np.where(tail[:-1] > 0, tail[:-1], np.inf)
        cert.theta = theta
        cert.terms = terms
        cert.theta_integrable = bool(np.all(tail == 0) or np.all(ratios < 1.0))
    return cert


# ---------------------------------------------------------------------------
# covering / no-subcritical side


def cover_lower_bound(lam: float, C_V: float, s: float, law: RadiusLaw, r: float) -> float:
    """Lower bound on P(some single germ ball contains B(o, r))."""
    if min(lam, C_V, s, r) <= 0:
        raise DomainError("parameters must be positive")
    tail = law.tail_moment(s, 2.0 * r, closed=True)
    if math.isinf(tail):
        return 1.0
    return -math.expm1(-lam / (2.0**s * C_V) * tail)


def cover_lower_bound_window(lam: float, C_V: float, s: float, law: RadiusLaw, r: float, halo: float,
                             quantile: float | None = None) -> float:
    """cover_lower_bound for the simulated process.

    Centres only in B(o, halo), radii conditioned on R <= law.quantile(quantile).
    A germ with R >= 2r and d(o, y) < min(R - r, halo) covers B(o, r), and that
    ball has mass >= min(R/2, halo)^s / C_V.
    """
    if min(lam, C_V, s, r, halo) <= 0:
        raise DomainError("parameters must be positive")
    f = lambda R: min(R, 2.0 * halo) ** s  # noqa: E731
    if isinstance(law, Dirac):
        val = f(law.R0) if law.R0 >= 2.0 * r else 0.0
    else:
        top = quantile if (quantile is not None and not law.bounded) else 1.0
        lo = float(law.cdf(2.0 * r))
        if lo >= top:
            return 0.0
        val = _quad(lambda u: f(float(law.quantile(u))), lo, top) / top
    return -math.expm1(-lam / (2.0**s * C_V) * val)


class Verdict(enum.Enum):
    COVERS_EVERYTHING = "covers-everything"
    PROPER_SUBSET = "proper-subset"


def whole_cover_dichotomy(law: RadiusLaw, s: float) -> Verdict:
    if not s > 0:
        raise DomainError("s must be positive")
    return Verdict.COVERS_EVERYTHING if math.isinf(law.moment(s)) else Verdict.PROPER_SUBSET


@dataclass(frozen=True)
class UltrametricTail:
    exact: float
    envelope: float
    spectrum_exact: float


def _mass_integral(space, law: RadiusLaw, r: float) -> float:
    """Integral of mu(B(x, R)) over R in (r, inf) against the law, x any point."""
    from .spaces.dyadic import level_below

    x = space.origin()
    if isinstance(law, Dirac):
        return space.ball_measure(x, law.R0) if law.R0 > r else 0.0
    # mu(B(x, R)) = 2**k on (2**k, 2**(k+1)], so integrate piece by piece
    total = 0.0
    lo = r
    k = level_below(r) if r > 0 else -1080
    hi_support = law.sup_support
    while lo < hi_support:
        hi = min(math.ldexp(1.0, k + 1), hi_support)
        if hi > lo:
            piece = float(law.cdf(hi) - law.cdf(lo))
            total += space.ball_measure(x, hi) * piece
            if math.isinf(hi_support) and piece < 1e-18 * max(total, 1e-300) and lo > 1.0:
                break
        lo = hi
        k += 1
        if k > 2000:
            break
    return total


def ultrametric_tail_bound(space, lam: float, law: RadiusLaw, r: float) -> UltrametricTail:
    """P(M(x) > r) on the dyadic backend, three ways.

    ``exact`` is 1 - exp(-lam * integral of mu(B(x, R)) over R > r); the
    ``envelope`` replaces mu(B(x, R)) by C_V R^s.  ``spectrum_exact`` accounts
    for the discrete distance spectrum: a germ of radius R only pushes M above
    r if some distance value lies strictly between r and R.
    """
    from .spaces.dyadic import DyadicSpace

    if not isinstance(space, DyadicSpace):
        raise UsageError("the exact law needs the ultrametric (dyadic) backend")
    if not r > 0:
        raise DomainError("r must be positive")
    exact = -math.expm1(-lam * _mass_integral(space, law, r))
    tail = law.tail_moment(space.s, r)
    envelope = 1.0 if math.isinf(tail) else -math.expm1(-lam * space.C_V * tail)
    nxt = math.ldexp(1.0, math.floor(math.log2(r)) + 1)
    spectrum = -math.expm1(-lam * _mass_integral(space, law, nxt))
    return UltrametricTail(exact, envelope, spectrum)


def mean_cluster_lower_bound(lam: float, C_V: float, s: float, beta: float, law: RadiusLaw) -> float:
    """Lower bound on E[M(o)^beta]; infinite when the (s + beta)-moment diverges."""
    m_s = law.moment(s)
    if not (0 < m_s < INF):
        raise DomainError("needs a finite positive s-moment")
    C = lam / (2.0**s * C_V) * m_s
    factor = -math.expm1(-C) / C
    m_sb = law.moment(s + beta)
    if math.isinf(m_sb):
        return INF
    return lam * factor / (2.0 ** (s + beta) * (s + beta) * C_V) * m_sb


def cavalieri_residual(law: RadiusLaw, p: float, q: float) -> float:
    """|lhs - rhs| / lhs for int R^(p+q) = p int r^(p-1) (int_r R^q) dr.

    Both sides by quadrature; NaN when the (p + q)-moment diverges.
    """
    if not (p > 0 and q > 0):
        raise DomainError("p, q must be positive")
    if math.isinf(law.moment(p + q)):
        return math.nan
    if isinstance(law, Dirac):
        lhs = law.R0 ** (p + q)
        top = law.R0
    else:
        lo = 1.0 if hasattr(law, "a") else 0.0
        hi = law.sup_support
        lhs = _quad(lambda R: R ** (p + q) * float(law.pdf(R)), lo, hi)
        top = hi
    rhs_integrand = lambda r: r ** (p - 1.0) * law.tail_moment(q, r)  # noqa: E731
    breaks = [1.0] if hasattr(law, "a") else []
    rhs = p * _quad(rhs_integrand, 0.0, top, breaks)
    return abs(lhs - rhs) / lhs


def _quad(f, lo, hi, breaks=()):
    pts = sorted({lo, *[b for b in breaks if lo < b < hi]})
    total = 0.0
    for a, b in zip(pts, pts[1:] + [hi]):
        val, _ = integrate.quad(f, a, b, epsrel=1e-11, epsabs=0, limit=500)
        total += val
    return total


def exp_inequality_violation(a, b) -> float:
    """Largest violation of (1 - e^-a) b >= (1 - e^-b) a over pairs with a <= b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    gap = -np.expm1(-lo) * hi - (-np.expm1(-hi)) * lo
    return float(max(0.0, -gap.min())) if gap.size else 0.0


def snowflake_exponent(s: float, alpha: float) -> float:
    if not s > 0:
        raise DomainError("s must be positive")
    if not 0 < alpha < 1:
        raise DomainError("alpha must lie in (0, 1)")
    return s / alpha


# ---------------------------------------------------------------------------
# bound sheet


BOUND_COLUMNS = ("r", "g_bound", "h_bound", "htilde_bound", "envelope")


@dataclass
class BoundSheet:
    lam: float
    s: float
    C_V: float
    sigma: float
    law: RadiusLaw
    C1: float
    r_grid: Sequence[float]
    tau: float = field(init=False)
    lambda0: object = field(init=False)
    rows: list = field(init=False)

    def __post_init__(self):
        self.tau = tau(self.sigma)
        self.lambda0 = lambda0(self.C1, self.C_V, self.s, self.sigma, self.law)
        self.rows = []
        for r in self.r_grid:
            eb = event_bounds(self.lam, self.C_V, self.s, self.sigma, self.law, r)
            env = cluster_tail_envelope(self.lam, self.C_V, self.s, self.sigma, self.law, eb.g.value, r)
            self.rows.append({"r": r, "g_bound": eb.g.value, "h_bound": eb.h.value,
                              "htilde_bound": eb.htilde.value, "envelope": env,
                              "raw": (eb.g.raw, eb.h.raw, eb.htilde.raw)})

    def to_json(self) -> str:
        lam0 = self.lambda0.value if isinstance(self.lambda0, Signal) else self.lambda0
        doc = {"lambda": self.lam, "s": self.s, "C_V": self.C_V, "sigma": self.sigma, "tau": self.tau,
               "C1": self.C1, "lambda0": lam0, "law": self.law.to_json(), "law_form": self.law.describe(),
               "rows": [{k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                         for k, v in row.items() if k != "raw"} for row in self.rows]}
        return json.dumps(doc, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(BOUND_COLUMNS)
        for row in self.rows:
            w.writerow([repr(float(row[c])) for c in BOUND_COLUMNS])
        return buf.getvalue()
