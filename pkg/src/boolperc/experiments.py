"""Config-driven experiments behind the command line.

Replication ``i`` always uses ``stream(seed, i)`` and anchors use a reserved
stream, so tables depend on (config, seed) only, never on the thread count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import theory, verify
from .errors import ConfigurationError, DomainError, GeometryError
from .percolation import cluster_radius, component_labels, single_ball_covers
from .radii import RadiusLaw, law_from_json
from .sampler import DEFAULT_HALO_FACTOR, DEFAULT_TRUNCATION, sample_boolean_model, stream
from .spaces import DyadicSpace, Space, space_from_json

ANCHOR_STREAM = 2**32 - 1
CHECKPOINT_EVERY = 1000

ESTIMATE_COLUMNS = ("r", "p_upper", "se_upper", "p_lower", "se_lower", "p_upper_pooled", "p_lower_pooled",
                    "cluster_tail_envelope", "ultrametric_exact", "ultrametric_envelope", "moment_beta")
SWEEP_COLUMNS = ("lambda", "law", "r", "p_upper", "se_upper", "p_lower", "se_lower", "influence_ok",
                 "verdict", "cover_lower_bound", "cover_lower_bound_window", "cover_freq", "cover_se")


class TruncationAbort(Exception):
    """Germs outside the halo could change the answer more than allowed."""


@dataclass
class ExperimentConfig:
    space: Space
    laws: list
    lambdas: list
    r_grid: list
    replications: int = 1000
    anchors: int = 16
    seed: int = 0
    window_radius: float = 10.0
    halo_factor: float = DEFAULT_HALO_FACTOR
    truncation_quantile: float | None = DEFAULT_TRUNCATION
    influence_tol: float = 1e-3
    influence_ceiling: float = 0.05
    beta: float | None = None
    C1: float = 1.0
    cover_radius: float = 1.0
    checks: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def law(self) -> RadiusLaw:
        return self.laws[0]

    @property
    def lam(self) -> float:
        return self.lambdas[0]

    def digest(self) -> str:
        doc = dict(self.raw)
        doc["seed"] = self.seed
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, doc: dict, seed: int | None = None, need_lambda: bool = True) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigurationError("config must be a JSON object")
        try:
            space = space_from_json(doc.get("space", {"kind": "euclidean", "dim": 2}))
            laws_doc = doc.get("laws", [doc["law"]] if "law" in doc else [{"kind": "dirac", "R0": 1.0}])
            laws = [law_from_json(d) for d in laws_doc]
            lambdas = doc.get("lambda_grid", [doc["lambda"]] if "lambda" in doc else [])
            lambdas = [float(v) for v in lambdas]
            r_grid = [float(v) for v in doc.get("r_grid", [1.0, 2.0, 4.0])]
            win = doc.get("window", {})
            cfg = cls(
                space=space, laws=laws, lambdas=lambdas, r_grid=r_grid,
                replications=int(doc.get("replications", 1000)),
                anchors=int(doc.get("anchors", 16)),
                seed=int(seed if seed is not None else doc.get("seed", 0)),
                window_radius=float(win.get("radius", 10.0)),
                halo_factor=float(win.get("halo_factor", DEFAULT_HALO_FACTOR)),
                truncation_quantile=win.get("truncation_quantile", DEFAULT_TRUNCATION),
                influence_tol=float(doc.get("influence_tol", 1e-3)),
                influence_ceiling=float(doc.get("influence_ceiling", 0.05)),
                beta=doc.get("beta"),
                C1=float(doc.get("C1", 1.0)),
                cover_radius=float(doc.get("cover_radius", 1.0)),
                checks=dict(doc.get("checks", {})),
                raw=doc,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad config: {exc}") from None
        cfg.validate(need_lambda)
        return cfg

    def validate(self, need_lambda: bool = True):
        if need_lambda and not self.lambdas:
            raise ConfigurationError("lambda (or lambda_grid) must be non-empty")
        if any(not v > 0 for v in self.lambdas):
            raise ConfigurationError("intensities must be positive")
        if not self.r_grid or any(b <= a for a, b in zip(self.r_grid, self.r_grid[1:])):
            raise ConfigurationError("r_grid must be non-empty and strictly increasing")
        if self.r_grid[0] <= 0:
            raise ConfigurationError("r_grid must be positive")
        if self.replications < 1 or self.anchors < 1:
            raise ConfigurationError("replications and anchors must be >= 1")
        if not self.laws:
            raise ConfigurationError("law grid must be non-empty")
        if not (self.window_radius > 0 and self.halo_factor >= 1):
            raise ConfigurationError("window radius must be positive and halo_factor >= 1")
        q = self.truncation_quantile
        if q is not None and not 0 < q <= 1:
            raise ConfigurationError("truncation_quantile must lie in (0, 1]")


def _se(p: np.ndarray, n: int) -> np.ndarray:
    return np.sqrt(np.clip(p * (1.0 - p), 0.0, None) / n)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# replications


def anchor_points(cfg: ExperimentConfig) -> list:
    rng = stream(cfg.seed, ANCHOR_STREAM)
    o = cfg.space.origin()
    return [o] + [cfg.space.sample_point(o, cfg.window_radius, rng) for _ in range(cfg.anchors - 1)]


def _draw(cfg: ExperimentConfig, lam: float, law: RadiusLaw, i: int):
    return sample_boolean_model(cfg.space, lam, law, cfg.space.origin(), cfg.window_radius, cfg.halo_factor,
                                seed=cfg.seed, stream_index=i, truncation_quantile=cfg.truncation_quantile)


def _one_replication(cfg, lam, law, anchors, i):
    sample = _draw(cfg, lam, law, i)
    labels = component_labels(cfg.space, sample)
    m = np.empty(len(anchors))
    cens = np.empty(len(anchors), dtype=bool)
    for a, x in enumerate(anchors):
        rep = cluster_radius(cfg.space, sample, x, labels, cfg.influence_tol)
        m[a], cens[a] = rep.m_value, rep.censored
    covers = single_ball_covers(cfg.space, sample, cfg.space.origin(), cfg.cover_radius)
    return m, cens, covers


def check_influence(cfg: ExperimentConfig, lam: float, law: RadiusLaw) -> float:
    probe = _draw(cfg, lam, law, 0)
    return probe.influence_bound


def replicate(cfg: ExperimentConfig, lam: float, law: RadiusLaw, threads: int = 1, checkpoint: Path | None = None):
    """(M values, censored flags, single-ball cover flags) for every replication, in order."""
    anchors = anchor_points(cfg)
    n = cfg.replications
    m = np.zeros((n, len(anchors)))
    cens = np.zeros((n, len(anchors)), dtype=bool)
    covers = np.zeros(n, dtype=bool)
    done = 0
    key = {"digest": cfg.digest(), "lambda": lam, "law": law.to_json()}
    manifest = None
    if checkpoint is not None:
        checkpoint.mkdir(parents=True, exist_ok=True)
        manifest_path = checkpoint / "manifest.json"
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())
        if not manifest or manifest.get("key") != key:
            manifest = {"key": key, "chunks": []}
        for ch in manifest["chunks"]:
            data = np.load(checkpoint / ch["file"])
            lo, hi = ch["start"], ch["stop"]
            m[lo:hi], cens[lo:hi], covers[lo:hi] = data["m"], data["cens"], data["covers"]
            done = max(done, hi)

    def work(i):
        return _one_replication(cfg, lam, law, anchors, i)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        start = done
        while start < n:
            stop = min(n, start + CHECKPOINT_EVERY)
            for i, (mi, ci, vi) in zip(range(start, stop), pool.map(work, range(start, stop))):
                m[i], cens[i], covers[i] = mi, ci, vi
            if checkpoint is not None:
                tag = f"{len(manifest['chunks']):05d}"
                np.savez(checkpoint / f"chunk_{tag}.npz", m=m[start:stop], cens=cens[start:stop],
                         covers=covers[start:stop])
                (checkpoint / f"sample_{tag}.pbm").write_bytes(_draw(cfg, lam, law, start).to_bytes())
                manifest["chunks"].append({"file": f"chunk_{tag}.npz", "start": start, "stop": stop})
                tmp = checkpoint / "manifest.json.tmp"
                tmp.write_text(json.dumps(manifest, sort_keys=True))
                os.replace(tmp, checkpoint / "manifest.json")
            start = stop
    return m, cens, covers


def _tail_rows(m, cens, r):
    """Per-anchor bracket of P(M > r): lower ignores censoring, upper counts it as exceeding."""
    lower = (m > r).mean(axis=0)
    upper = ((m > r) | cens).mean(axis=0)
    return upper, lower


def _cluster_envelope(cfg, lam, law, r):
    s, C_V, sig = cfg.space.s, cfg.space.C_V, cfg.space.sigma
    r0 = r / (9.0 * sig**2)
    g = theory.event_bounds(lam, C_V, s, sig, law, r0).g.value
    return theory.cluster_tail_envelope(lam, C_V, s, sig, law, g, r0)


def run_estimate(cfg: ExperimentConfig, threads: int = 1, checkpoint: Path | None = None) -> dict:
    lam, law = cfg.lam, cfg.law
    influence = check_influence(cfg, lam, law)
    if influence > cfg.influence_ceiling:
        raise TruncationAbort(
            f"influence bound {influence:.3g} exceeds the ceiling {cfg.influence_ceiling:g}; "
            "raise window.halo_factor (or the window radius) so far germs cannot reach the window")
    m, cens, _ = replicate(cfg, lam, law, threads, checkpoint)
    n = cfg.replications
    rows = []
    mom = None
    if cfg.beta is not None:
        mom = float(np.mean(np.minimum(m, cfg.window_radius) ** float(cfg.beta)))
    ultra = isinstance(cfg.space, DyadicSpace)
    for r in cfg.r_grid:
        up, lo = _tail_rows(m, cens, r)
        a = int(np.argmax(up))
        row = {"r": r, "p_upper": up[a], "se_upper": float(_se(up[a], n)),
               "p_lower": lo.max(), "se_lower": float(_se(lo.max(), n)),
               "p_upper_pooled": float(up.mean()), "p_lower_pooled": float(lo.mean()),
               "cluster_tail_envelope": _cluster_envelope(cfg, lam, law, r),
               "ultrametric_exact": None, "ultrametric_envelope": None, "moment_beta": mom}
        if ultra:
            u = theory.ultrametric_tail_bound(cfg.space, lam, law, r)
            row["ultrametric_exact"], row["ultrametric_envelope"] = u.spectrum_exact, u.envelope
        rows.append(row)
    return {"columns": ESTIMATE_COLUMNS, "rows": rows, "influence_bound": influence, "replications": n,
            "anchors": cfg.anchors, "seed": cfg.seed}


def run_sweep(cfg: ExperimentConfig, threads: int = 1) -> dict:
    rows = []
    r = cfg.r_grid[-1]
    s, C_V = cfg.space.s, cfg.space.C_V
    n = cfg.replications
    for law in cfg.laws:
        verdict = theory.whole_cover_dichotomy(law, s).value
        for lam in cfg.lambdas:
            ok = check_influence(cfg, lam, law) <= cfg.influence_ceiling
            m, cens, covers = replicate(cfg, lam, law, threads)
            up, lo = _tail_rows(m, cens, r)
            freq = float(covers.mean())
            rows.append({"lambda": lam, "law": law.describe(), "r": r,
                         "p_upper": float(up.max()), "se_upper": float(_se(up.max(), n)),
                         "p_lower": float(lo.max()), "se_lower": float(_se(lo.max(), n)),
                         "influence_ok": ok, "verdict": verdict,
                         "cover_lower_bound": theory.cover_lower_bound(lam, C_V, s, law, cfg.cover_radius),
                         "cover_lower_bound_window": theory.cover_lower_bound_window(
                             lam, C_V, s, law, cfg.cover_radius, cfg.window_radius * cfg.halo_factor,
                             cfg.truncation_quantile),
                         "cover_freq": freq, "cover_se": float(_se(freq, n))})
    return {"columns": SWEEP_COLUMNS, "rows": rows}


def run_bounds(cfg: ExperimentConfig) -> theory.BoundSheet:
    sp = cfg.space
    return theory.BoundSheet(cfg.lam, sp.s, sp.C_V, sp.sigma, cfg.law, cfg.C1, cfg.r_grid)


# ---------------------------------------------------------------------------
# verification


def run_verify(cfg: ExperimentConfig) -> list[verify.CheckResult]:
    sp = cfg.space
    ch = cfg.checks
    rng = stream(cfg.seed, ANCHOR_STREAM - 1)
    out: list[verify.CheckResult] = []
    tol = float(ch.get("exponent_tol", 0.1))

    a = verify.check_ahlfors(sp, int(ch.get("ahlfors_trials", 100)), rng=rng)
    ok = not a.violations and abs(a.s_hat - sp.s) <= tol * sp.s
    out.append(verify.CheckResult("ahlfors", ok, f"s_hat={a.s_hat:.4f} declared s={sp.s:.4f} "
                                  f"C_hat={a.C_hat:.4f} violations={len(a.violations)}"))

    u = verify.check_uniformly_perfect(sp, trials=int(ch.get("perfect_trials", 50)), rng=rng)
    out.append(verify.CheckResult("uniformly_perfect", u.passed,
                                  f"witness={json.dumps(u.witness)} tries={u.worst_tries}"))

    eps = tuple(ch.get("eps_grid", verify.DEFAULT_EPS))
    try:
        c = verify.covering_number(sp, sp.origin(), 1.0, eps, int(ch.get("probe_budget", 20000)), rng)
        ok = c.stable and abs(c.net_exponent - sp.s) <= tol * sp.s
        out.append(verify.CheckResult("covering_number", ok, f"net_exponent={c.net_exponent:.4f} C={c.C:.4f} "
                                      f"counts={json.dumps({repr(k): v for k, v in c.counts.items()})}"))
    except (GeometryError, np.linalg.LinAlgError, ValueError) as exc:
        c = None
        out.append(verify.CheckResult("covering_number", False, str(exc)))

    C1 = cfg.C1
    if u.passed:
        sig = sp.sigma
        # #L ~ C (outer radius / l)^exponent; skip scales that would need millions of probes
        predicted = (c.C if c else 1.0) * (80.0 * sig**5) ** (c.net_exponent if c else sp.s)
        limit = float(ch.get("net_size_limit", 2e5))
        if predicted > limit:
            out.append(verify.CheckResult("nets_K_L", True, f"skipped: predicted #L ~ {predicted:.3g} > {limit:g}"))
        else:
            try:
                K, L = verify.nets_K_L(sp, sp.origin(), float(ch.get("nets_r", 1.0)), rng=rng)
                C1 = float(K.cardinality * L.cardinality)
                out.append(verify.CheckResult("nets_K_L", K.passed and L.passed,
                                              f"#K={K.cardinality} #L={L.cardinality} C1={C1:g}"))
            except GeometryError as exc:
                out.append(verify.CheckResult("nets_K_L", False, str(exc)))
    else:
        out.append(verify.CheckResult("nets_K_L", False, "needs uniform perfectness"))

    law = cfg.law
    res = theory.cavalieri_residual(law, 1.0, 2.0)
    out.append(verify.CheckResult("cavalieri", math.isnan(res) or res <= 1e-6,
                                  "moment diverges" if math.isnan(res) else f"residual={res:.3g}"))

    lam0 = theory.lambda0(C1, sp.C_V, sp.s, sp.sigma, law)
    if lam0 is theory.NO_SUBCRITICAL:
        out.append(verify.CheckResult("recursion_certify", True, "no subcritical phase (infinite s-moment)"))
    else:
        c3 = sp.sigma**3
        f0 = lambda r: C1 * theory.event_bounds(lam0, sp.C_V, sp.s, sp.sigma, law, r).g.raw  # noqa: E731
        g = lambda r: C1 * theory.event_bounds(lam0, sp.C_V, sp.s, sp.sigma, law, r).htilde.raw  # noqa: E731
        try:
            cert = theory.recursion_certify(f0, g, c3)
            out.append(verify.CheckResult("recursion_certify", True,
                                          f"lambda0={lam0:.4g} C1={C1:g} final_envelope={cert.envelope[-1]:.3g}"))
        except theory.CertificateRefused as exc:
            out.append(verify.CheckResult("recursion_certify", False, f"{exc} at r={exc.witness:g}"))
    return out


def load_config(path: str | None, seed: int | None, need_lambda: bool = True) -> ExperimentConfig:
    doc: dict[str, Any] = {}
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigurationError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
    try:
        return ExperimentConfig.from_dict(doc, seed, need_lambda)
    except DomainError as exc:
        raise ConfigurationError(str(exc)) from None
