"""Bracketed null-distance estimates from dyadically refined causal lattices.

The estimator never claims more than it can certify: the upper bound is the
best lattice path found, the lower bound is the reverse-triangle bound
|delta tau| (optionally improved by a user-certified anti-Lipschitz
constant), and escaping-minimizer models are flagged, not chased.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import lattice as lt
from . import models as md
from . import paths as pth
from .errors import BadParams, Unreachable

DIVERGENT_REGION = "DIVERGENT_REGION"


@dataclass(frozen=True)
class EstimateOptions:
    levels: int = 6
    conv_tol: float = 1e-3
    delta0: Optional[float] = None
    region: Optional[tuple] = None           # explicit per-axis (lo, hi)
    region_pad: Optional[float] = None       # default: 2*cheb(p,q) + 1
    stencil: int = 2
    exact_endpoints: bool = True
    n_samples: int = pth.DEFAULT_SAMPLES
    margin: Optional[float] = None
    node_cap: int = lt.NODE_CAP
    threads: int = 1
    anti_lipschitz: Optional[tuple] = None   # (AuxiliaryMetric h, certified C)


@dataclass
class DistanceEstimate:
    upper: float
    lower: float
    level: int
    converged: bool
    history: list                      # [(level, upper)]
    path: Optional[pth.PiecewisePath] = None
    monotone: bool = False             # a monotone lattice path joins p and q
    flags: tuple = ()
    levels_detail: list = field(default_factory=list)  # [(level, delta, raw upper)]

    def __post_init__(self):
        if self.upper < self.lower - 1e-12 * (1.0 + abs(self.upper)):
            raise AssertionError("estimate bracket inverted")


def _chebyshev(p, q) -> float:
    return float(np.max(np.abs(np.asarray(q, float) - np.asarray(p, float))))


def _default_region(p, q, pad, delta0):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    lo = np.minimum(p, q) - pad
    hi = np.maximum(p, q) + pad
    lo = np.floor(lo / delta0) * delta0
    hi = np.ceil(hi / delta0) * delta0
    return tuple((float(a), float(b)) for a, b in zip(lo, hi))


def _resolve_grid(p, q, opts: EstimateOptions):
    if opts.region is not None:
        region = tuple((float(a), float(b)) for a, b in opts.region)
        extent = max(hi - lo for lo, hi in region)
        delta0 = opts.delta0 or 2.0 ** math.floor(math.log2(extent / 16.0))
        return region, delta0
    pad = opts.region_pad
    if pad is None:
        pad = 2.0 * _chebyshev(p, q) + 1.0
    if opts.delta0 is not None:
        delta0 = opts.delta0
    else:
        extent = _chebyshev(p, q) + 2.0 * pad
        delta0 = 2.0 ** math.floor(math.log2(extent / 16.0))
    return _default_region(p, q, pad, delta0), delta0


def _query(model, region, delta, stencil, p, q, opts):
    spec = lt.LatticeSpec(region, delta, stencil)
    lat = lt.build(model, spec, n_samples=opts.n_samples, margin=opts.margin,
                   node_cap=opts.node_cap, threads=opts.threads)
    if opts.exact_endpoints:
        lat = lat.with_endpoints([p, q], n_samples=opts.n_samples,
                                 margin=opts.margin)
    return lat


def estimate(model, p, q, opts: EstimateOptions = EstimateOptions()) -> DistanceEstimate:
    """Refine nested lattices over a padded box around {p, q}.

    Raises Unreachable only if every level fails to connect the endpoints.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not (model.in_domain(p) and model.in_domain(q)):
        raise BadParams("estimate endpoints must lie in the model domain")
    region, delta0 = _resolve_grid(p, q, opts)

    dtau = abs(model.tau_at(q) - model.tau_at(p))
    best = math.inf
    best_path = None
    history = []
    detail = []
    converged = False
    last_raw = None
    last_lat = None
    level = -1
    for level in range(opts.levels):
        delta = delta0 / (2.0 ** level)
        lat = _query(model, region, delta, opts.stencil, p, q, opts)
        try:
            raw, path = lat.null_shortest_path(p, q)
        except Unreachable:
            detail.append((level, delta, math.inf))
            continue
        last_lat = lat
        if raw < best:
            best = raw
            best_path = path
        detail.append((level, delta, raw))
        history.append((level, best))
        if last_raw is not None and opts.conv_tol > 0:
            change = abs(raw - last_raw) / max(abs(raw), 1e-300)
            if change < opts.conv_tol:
                converged = True
                break
        last_raw = raw
    if not math.isfinite(best):
        raise Unreachable("endpoints disconnected at every refinement level")

    lower = dtau
    monotone = False
    if last_lat is not None:
        tau_p = model.tau_at(p)
        tau_q = model.tau_at(q)
        a, b = (p, q) if tau_q >= tau_p else (q, p)
        monotone = last_lat.future_reachable(a, b)
    if opts.anti_lipschitz is not None:
        h, C = opts.anti_lipschitz
        lower = max(lower, C * _chord_h_length(h, p, q))

    return DistanceEstimate(
        upper=best,
        lower=lower,
        level=level,
        converged=converged,
        history=history,
        path=best_path,
        monotone=monotone,
        levels_detail=detail,
    )


def _chord_h_length(h: md.AuxiliaryMetric, p, q, n_quad: int = 32) -> float:
    """h-length of the straight chord: a lower bound of d_h for the constant
    comparison metrics this engine certifies constants against."""
    nodes, weights = pth._gl_rule(n_quad)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    v = q - p
    pts = p[None, :] + nodes[:, None] * v[None, :]
    hm = h.evaluator(pts)
    speeds = np.sqrt(np.einsum("aij,i,j->a", hm, v, v))
    return float(weights @ speeds)


def exact_oracle(model, p, q) -> Optional[float]:
    """Exact null distance when the model ships one; None otherwise."""
    if model.nulldist_oracle is not None:
        val = model.nulldist_oracle(np.asarray(p, float), np.asarray(q, float))
        if val is not None:
            return float(val)
    if model.causal_oracle is not None:
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        if model.causal_oracle(p, q) is True or model.causal_oracle(q, p) is True:
            return abs(model.tau_at(q) - model.tau_at(p))
    return None


@dataclass
class ConvergenceReport:
    rows: list                     # (level, delta, upper, lower, gap)
    region_rows: list              # (index, region, upper)
    flags: tuple


def convergence_report(model, p, q, opts: EstimateOptions = EstimateOptions(),
                       region_scan: Optional[Sequence] = None,
                       scan_delta: Optional[float] = None) -> ConvergenceReport:
    """Per-level bracket table, plus an optional fixed-delta region scan.

    If enlarging the region strictly improves the upper bound at fixed delta
    the report is flagged DIVERGENT_REGION: the signature of minimizing
    sequences escaping every compact set.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    est = estimate(model, p, q, opts)
    dtau = abs(model.tau_at(q) - model.tau_at(p))
    rows = []
    running = math.inf
    for level, delta, raw in est.levels_detail:
        if math.isfinite(raw):
            running = min(running, raw)
        upper = running
        gap = upper - est.lower if math.isfinite(upper) else math.inf
        rows.append((level, delta, upper, est.lower, gap))

    region_rows = []
    flags = []
    if region_scan:
        uppers = []
        for idx, region in enumerate(region_scan):
            delta = scan_delta or (opts.delta0 or 0.5)
            scan_opts = replace(opts, region=tuple(region), delta0=delta,
                                levels=1, conv_tol=0.0)
            try:
                scan_est = estimate(model, p, q, scan_opts)
                val = scan_est.upper
            except Unreachable:
                val = math.inf
            uppers.append(val)
            region_rows.append((idx, tuple(region), val))
        finite = [u for u in uppers if math.isfinite(u)]
        if len(finite) >= 2:
            strict = all(
                u2 < u1 - 1e-6 * (1.0 + abs(u1))
                for u1, u2 in zip(finite[:-1], finite[1:])
            )
            if strict:
                flags.append(DIVERGENT_REGION)
    return ConvergenceReport(rows, region_rows, tuple(flags))
