"""Completeness probes: steepness, anti-Lipschitz constants, bi-Lipschitz
ratio scans, and Cauchy-escape detection along inextendible causal curves.

Sampling is seeded and deterministic; the default seed spells NULLD in
base 36.  Causal pairs are certified by the model oracle or by straight-
segment verification, never assumed.  The anti-Lipschitz ratio divides by
the straight-chord h-length, which for the constant comparison metrics used
here equals d_h, keeping the reported infimum a certified lower estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import models as md
from . import paths as pth
from .errors import BadParams, NoCausalPairs, NotCausalRay

DEFAULT_SEED = int("NULLD", 36)  # 40058833

INCOMPLETE_WITNESS = "incomplete_witness"
NO_WITNESS = "none"


# ---------------------------------------------------------------------------
# Causal samplers
# ---------------------------------------------------------------------------

def _uniform_points(model, region, n, rng, max_tries=200):
    region = tuple(region)
    lo = np.array([a for a, _b in region])
    hi = np.array([b for _a, b in region])
    out = []
    for _ in range(max_tries):
        pts = rng.uniform(lo, hi, size=(n, model.dim))
        keep = model.domain(pts)
        out.append(pts[keep])
        if sum(len(o) for o in out) >= n:
            break
    pts = np.vstack(out)
    if pts.shape[0] < n:
        raise BadParams("could not sample enough in-domain points")
    return pts[:n]


def future_null_directions(model, x) -> np.ndarray:
    """Coordinate-plane null vectors with unit time component: the extremes
    of steepness sit on the cone boundary."""
    g = model.metric_at(np.asarray(x, float))
    dirs = []
    for i in range(1, model.dim):
        mu = math.sqrt(abs(g[0, 0]) / g[i, i])
        for s in (+1.0, -1.0):
            v = np.zeros(model.dim)
            v[0] = 1.0
            v[i] = s * mu
            dirs.append(v)
    return np.asarray(dirs)


def sample_future_causal(model, xs, rng, theta_range=(1.0, 2.0)) -> np.ndarray:
    """One future causal vector per point: random spatial direction, time
    component scaled onto or inside the cone (theta = 1 is null)."""
    xs = np.atleast_2d(xs)
    n = xs.shape[0]
    g = model.metric(xs)
    w = rng.standard_normal((n, model.dim))
    w[:, 0] = 0.0
    norms = np.linalg.norm(w, axis=1)
    norms[norms == 0] = 1.0
    w /= norms[:, None]
    spatial_sq = np.einsum("aij,ai,aj->a", g, w, w)
    theta = rng.uniform(*theta_range, size=n)
    a = theta * np.sqrt(spatial_sq / np.abs(g[:, 0, 0]))
    v = w.copy()
    v[:, 0] = a
    return v


def sample_causal_pairs(model, region, n_pairs, rng, step_range=(0.05, 0.5),
                        include_null_axes: bool = True, max_tries: int = 400):
    """Certified future-ordered causal pairs (p, q) inside region x domain."""
    region = tuple(region)
    lo = np.array([a for a, _b in region])
    hi = np.array([b for _a, b in region])
    extent = float(np.min(hi - lo))
    ps, qs = [], []

    if include_null_axes:
        center = _uniform_points(model, region, 1, rng)[0]
        for v in future_null_directions(model, center):
            lam = 0.25 * extent / max(np.max(np.abs(v)), 1.0)
            q = center + lam * v
            if np.all(q >= lo) and np.all(q <= hi) and model.in_domain(q):
                ps.append(center.copy())
                qs.append(q)

    tries = 0
    while len(ps) < n_pairs and tries < max_tries:
        tries += 1
        m = max(n_pairs - len(ps), 8)
        base = _uniform_points(model, region, m, rng)
        vs = sample_future_causal(model, base, rng)
        lam = rng.uniform(*step_range, size=m) * extent
        lam /= np.maximum(np.max(np.abs(vs), axis=1), 1.0)
        q = base + lam[:, None] * vs
        inside = np.all(q >= lo, axis=1) & np.all(q <= hi, axis=1)
        inside &= model.domain(q)
        if not np.any(inside):
            continue
        base, q = base[inside], q[inside]
        if model.causal_oracle is not None:
            certified = np.array(
                [model.causal_oracle(p_, q_) is True for p_, q_ in zip(base, q)]
            )
        else:
            ok, _b, _r, orient = pth._check_segments(
                model, base, q, pth.DEFAULT_SAMPLES, pth.default_margin(model)
            )
            certified = ok & (orient == 1)
        ps.extend(base[certified])
        qs.extend(q[certified])
    if len(ps) < n_pairs:
        raise NoCausalPairs(
            f"found {len(ps)} certified causal pairs, needed {n_pairs}"
        )
    return np.asarray(ps[:n_pairs]), np.asarray(qs[:n_pairs])


# ---------------------------------------------------------------------------
# Escape probes (Cauchy sequences along inextendible curves)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ray:
    base: tuple
    velocity: tuple


@dataclass
class EscapeWitness:
    ray: object
    tail_sum: float
    horizon: float
    escaped: bool
    verdict: str
    increments: list = field(default_factory=list)


def escape_probe(model, ray: Ray, horizon: int, eps: float) -> EscapeWitness:
    """March a straight causal ray in unit steps and watch the tau increments.

    Emits an incomplete_witness when tau stays summable (tail over the last
    half below eps) while the ray escapes every earlier sup-norm checkpoint.
    """
    if horizon < 2:
        raise BadParams("horizon must be at least 2")
    base = np.asarray(ray.base, dtype=float)
    vel = np.asarray(ray.velocity, dtype=float)
    steps = np.arange(horizon + 1)
    points = base[None, :] + steps[:, None] * vel[None, :]
    ok, _blocked, _ratio, orient = pth._check_segments(
        model, points[:-1], points[1:], pth.DEFAULT_SAMPLES,
        pth.default_margin(model),
    )
    if not np.all(ok):
        raise NotCausalRay("ray segment failed causal verification")
    taus = model.tau(points)
    increments = np.abs(np.diff(taus))
    tail = math.fsum(float(x) for x in increments[horizon // 2:])
    radii = np.max(np.abs(points), axis=1)
    escaped = bool(np.all(radii[-1] > radii[:-1]))
    verdict = INCOMPLETE_WITNESS if (tail < eps and escaped) else NO_WITNESS
    return EscapeWitness(ray, tail, float(horizon), escaped, verdict,
                         increments=list(map(float, increments)))


def escape_probe_sequence(model, points, bound_fn: Callable, eps: float) -> EscapeWitness:
    """Sequence-mode probe: an explicit point sequence plus a bound function
    for pairwise null-distance upper bounds (the incompleteness witness of
    the sliced warp lives on a spacelike slice, not a causal ray)."""
    points = [np.asarray(p, dtype=float) for p in points]
    if len(points) < 3:
        raise BadParams("need at least three sequence points")
    n = len(points) - 1
    increments = [float(bound_fn(i, i + 1)) for i in range(n)]
    if any(x < 0 for x in increments):
        raise BadParams("bound function must be nonnegative")
    tail = math.fsum(increments[n // 2:])
    radii = np.array([np.max(np.abs(p)) for p in points])
    escaped = bool(np.all(radii[-1] > radii[:-1]))
    verdict = INCOMPLETE_WITNESS if (tail < eps and escaped) else NO_WITNESS
    return EscapeWitness(tuple(map(tuple, points[:2])), tail, float(n),
                         escaped, verdict, increments=increments)


def slice_bounce_bound_check(model, x_a: float, x_b: float, n_teeth: int,
                             t_floor: float = 0.0, tilt: float = 1e-6):
    """Constructed null-hugging zigzag on the {t ~ t_floor} slice of the
    sliced warp model; returns (null_len, verified) for certifying a claimed
    pairwise bound."""
    if x_b <= x_a:
        raise BadParams("need x_a < x_b")

    def fiber(x):
        pts = np.column_stack([np.full(np.size(x), t_floor), np.atleast_1d(x)])
        return np.sqrt(model.metric(pts)[:, 1, 1])

    xs = np.linspace(x_a, x_b, 2 * n_teeth + 1)
    t = np.full(2 * n_teeth + 1, t_floor)
    for i in range(n_teeth):
        span = [xs[2 * i], xs[2 * i + 1], xs[2 * i + 2]]
        if span[0] < 0.0 < span[2]:
            span.append(0.0)  # the fiber factor peaks at x = 0
        fmax = float(np.max(fiber(np.asarray(span))))
        t[2 * i + 1] = t_floor + (1.0 + tilt) * fmax * (xs[2 * i + 1] - xs[2 * i])
    points = np.column_stack([t, xs])
    path = pth.path_from_breakpoints(model, points)
    verdict = pth.verify_causal(model, path)
    null_len = pth.null_length(model, path, verify=False)
    return null_len, verdict.status == pth.VERIFIED


# ---------------------------------------------------------------------------
# Scans
# ---------------------------------------------------------------------------

@dataclass
class ScanResult:
    value: float
    argmin: object
    rows: list = field(default_factory=list)


def chord_h_length(h: md.AuxiliaryMetric, p, q, n_quad: int = 32) -> float:
    nodes, weights = pth._gl_rule(n_quad)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    v = q - p
    pts = p[None, :] + nodes[:, None] * v[None, :]
    hm = h.evaluator(pts)
    speeds = np.sqrt(np.einsum("aij,i,j->a", hm, v, v))
    return float(weights @ speeds)


def anti_lipschitz_scan(model, h: md.AuxiliaryMetric, region, n_pairs: int,
                        seed: int = DEFAULT_SEED) -> ScanResult:
    """inf over certified causal pairs of (tau(q) - tau(p)) / chord_h(p, q)."""
    rng = np.random.default_rng(seed)
    ps, qs = sample_causal_pairs(model, region, n_pairs, rng)
    ratios = []
    for p, q in zip(ps, qs):
        dtau = model.tau_at(q) - model.tau_at(p)
        dist = chord_h_length(h, p, q)
        if dist <= 0:
            continue
        ratios.append((dtau / dist, (tuple(p), tuple(q))))
    if not ratios:
        raise NoCausalPairs("no usable pairs for the anti-Lipschitz scan")
    value, argmin = min(ratios, key=lambda r: r[0])
    return ScanResult(value, argmin, rows=[r[0] for r in ratios])


def steepness_scan(model, h: md.AuxiliaryMetric, region, n_samples: int,
                   seed: int = DEFAULT_SEED) -> ScanResult:
    """min over sampled future causal vectors of dtau(v) - |v|_h.

    Random cone vectors plus the deterministic coordinate-null directions
    (unit time component); min_slack >= 0 is evidence of h-steepness.
    """
    rng = np.random.default_rng(seed)
    xs = _uniform_points(model, region, n_samples, rng)
    vs = sample_future_causal(model, xs, rng)
    best = math.inf
    arg = None
    for x in xs[: min(len(xs), 16)]:
        for v in future_null_directions(model, x):
            hm = h.at(x)
            slack = float(md.dtau_v(model, x[None, :], v[None, :])[0]
                          - math.sqrt(v @ hm @ v))
            if slack < best:
                best, arg = slack, (tuple(x), tuple(v))
    dtv = md.dtau_v(model, xs, vs)
    hmats = h.evaluator(xs)
    hnorm = np.sqrt(np.einsum("aij,ai,aj->a", hmats, vs, vs))
    slacks = dtv - hnorm
    i = int(np.argmin(slacks))
    if slacks[i] < best:
        best, arg = float(slacks[i]), (tuple(xs[i]), tuple(vs[i]))
    return ScanResult(best, arg)


def bilipschitz_scan(model_tau1, model_tau2, region, n_pairs: int,
                     seed: int = DEFAULT_SEED,
                     pairs: Optional[Sequence] = None):
    """Extremes of (tau2(q) - tau2(p)) / (tau1(q) - tau1(p)) over causal
    pairs; causal-pair tau differences equal the null distances."""
    if pairs is None:
        rng = np.random.default_rng(seed)
        ps, qs = sample_causal_pairs(model_tau1, region, n_pairs, rng)
        pairs = list(zip(ps, qs))
    ratios = []
    for p, q in pairs:
        d1 = model_tau1.tau_at(q) - model_tau1.tau_at(p)
        d2 = model_tau2.tau_at(q) - model_tau2.tau_at(p)
        if d1 <= 0:
            continue
        ratios.append(d2 / d1)
    if not ratios:
        raise NoCausalPairs("no causal pairs with positive tau1 increment")
    return min(ratios), max(ratios), ratios
