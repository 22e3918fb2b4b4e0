"""Piecewise causal polylines: verification, null length, Wick length.

Paths are straight-line polylines in chart coordinates.  Causality of each
segment is certified by sampling the quadratic form g(v, v) at equispaced
points and requiring

    g(v, v) <= margin * S(x, v),      S(x, v) = |v|^T |g(x)| |v|,

together with a constant sign of dtau(v) along the segment.  S is a positive
quadratic scale that is conformally invariant and coincides with the Wick
norm squared on lapse-normalized constant-coefficient models; unlike the
Wick norm it stays defined where tau fails to be temporal.  margin = 0 for
constant-coefficient metrics, margin = -1e-9 (strictly timelike-biased) for
variable ones.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import models as md
from .errors import BadParams, DegenerateSegment, NotCausal, OutOfDomain

DEFAULT_SAMPLES = 33
STRICT_MARGIN = -1e-9

VERIFIED = "verified"
VIOLATED = "violated"
BOUNDARY_CROSSING = "boundary_crossing"

# Gauss-Legendre rule cache for wick_length quadrature.
_GL_CACHE: dict = {}


def default_margin(model: md.SpacetimeModel) -> float:
    return 0.0 if model.constant_metric else STRICT_MARGIN


@dataclass(frozen=True)
class CausalVerdict:
    status: str                      # verified | violated | boundary_crossing
    worst_margin: float              # most positive g(v,v)/S(x,v) observed
    failing_segment: Optional[int] = None
    orientations: tuple = ()         # per-segment sampled orientation


@dataclass(frozen=True)
class PiecewisePath:
    """Ordered breakpoints with per-segment time orientation."""

    breakpoints: np.ndarray          # (k+1, dim)
    orientations: tuple              # length k, entries "future" / "past"
    model_label: str = ""

    def __post_init__(self):
        pts = np.asarray(self.breakpoints, dtype=float)
        if pts.ndim != 2:
            raise BadParams("breakpoints must be a (k+1, dim) array")
        if not np.all(np.isfinite(pts)):
            raise BadParams("breakpoints contain non-finite entries")
        if len(self.orientations) != max(pts.shape[0] - 1, 0):
            raise BadParams("need one orientation per segment")
        if pts.shape[0] >= 2 and np.any(np.all(pts[1:] == pts[:-1], axis=1)):
            raise BadParams("consecutive breakpoints must be distinct")
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "orientations", tuple(self.orientations))

    @property
    def n_segments(self) -> int:
        return self.breakpoints.shape[0] - 1

    def reversed(self) -> "PiecewisePath":
        flip = {"future": "past", "past": "future"}
        return PiecewisePath(
            self.breakpoints[::-1].copy(),
            tuple(flip[o] for o in reversed(self.orientations)),
            self.model_label,
        )

    def concat(self, other: "PiecewisePath") -> "PiecewisePath":
        if not np.array_equal(self.breakpoints[-1], other.breakpoints[0]):
            raise BadParams("paths do not share an endpoint")
        return PiecewisePath(
            np.vstack([self.breakpoints, other.breakpoints[1:]]),
            self.orientations + other.orientations,
            self.model_label or other.model_label,
        )


def path_from_breakpoints(model: md.SpacetimeModel, points) -> PiecewisePath:
    """Build a path, inferring each segment's orientation from the tau increment."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise BadParams("need at least one breakpoint")
    # drop exact consecutive duplicates (harmless junction artifacts)
    if pts.shape[0] >= 2:
        keep = np.ones(pts.shape[0], dtype=bool)
        keep[1:] = ~np.all(pts[1:] == pts[:-1], axis=1)
        pts = pts[keep]
    taus = model.tau(pts)
    orients = tuple(
        md.FUTURE if taus[i + 1] >= taus[i] else md.PAST
        for i in range(pts.shape[0] - 1)
    )
    return PiecewisePath(pts, orients, model.label)


# ---------------------------------------------------------------------------
# Vectorized segment verification
# ---------------------------------------------------------------------------

def _check_segments(model, a, b, n_samples, margin):
    """Sampled causality check for a batch of straight segments.

    a, b: (m, dim) endpoint arrays.  Returns (ok, blocked, ratio, orient)
    with per-segment entries; orient is +1 future, -1 past, 0 inconsistent.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    m = a.shape[0]
    v = b - a

    blocked = np.zeros(m, dtype=bool)
    if model.segment_blocked is not None:
        blocked |= model.segment_blocked(a, b)

    fr = np.linspace(0.0, 1.0, n_samples)
    pts = a[None, :, :] + fr[:, None, None] * v[None, :, :]   # (s, m, dim)
    flat = pts.reshape(-1, model.dim)

    if not model.full_domain:
        inside = model.domain(flat).reshape(n_samples, m)
        blocked |= ~np.all(inside, axis=0)

    vflat = np.broadcast_to(v, (n_samples, m, model.dim)).reshape(-1, model.dim)
    q = md.gvv(model, flat, vflat).reshape(n_samples, m)
    scale = md.causal_scale(model, flat, vflat).reshape(n_samples, m)
    s = md.dtau_v(model, flat, vflat).reshape(n_samples, m)

    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.max(q / scale, axis=0)
    # tol_null band absorbs roundoff on exactly null segments; verified
    # always implies worst_margin <= tol_null
    causal_ok = np.all(q <= (margin + md.TOL_NULL) * scale, axis=0)
    future = np.all(s > 0.0, axis=0)
    past = np.all(s < 0.0, axis=0)
    orient = np.where(future, 1, np.where(past, -1, 0))
    ok = causal_ok & (orient != 0) & ~blocked
    return ok, blocked, ratio, orient


def segment_causal(model, a, b, n_samples: int = DEFAULT_SAMPLES,
                   margin: Optional[float] = None) -> CausalVerdict:
    """Verdict for a single straight segment from a to b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.array_equal(a, b):
        raise DegenerateSegment("segment endpoints coincide")
    if n_samples < 2:
        raise BadParams("n_samples must be at least 2")
    if margin is None:
        margin = default_margin(model)
    ok, blocked, ratio, orient = _check_segments(model, a, b, n_samples, margin)
    names = {1: md.FUTURE, -1: md.PAST, 0: md.NONE}
    if blocked[0]:
        return CausalVerdict(BOUNDARY_CROSSING, float(ratio[0]), 0, (names[int(orient[0])],))
    if ok[0]:
        return CausalVerdict(VERIFIED, float(ratio[0]), None, (names[int(orient[0])],))
    return CausalVerdict(VIOLATED, float(ratio[0]), 0, (names[int(orient[0])],))


def verify_causal(model, path: PiecewisePath, n_samples: int = DEFAULT_SAMPLES,
                  margin: Optional[float] = None,
                  check_declared: bool = True) -> CausalVerdict:
    """Verify every segment of a path; boundary crossings dominate violations."""
    if path.n_segments == 0:
        return CausalVerdict(VERIFIED, -math.inf)
    if margin is None:
        margin = default_margin(model)
    a = path.breakpoints[:-1]
    b = path.breakpoints[1:]
    ok, blocked, ratio, orient = _check_segments(model, a, b, n_samples, margin)
    names = {1: md.FUTURE, -1: md.PAST, 0: md.NONE}
    orientations = tuple(names[int(o)] for o in orient)
    if check_declared:
        declared = np.array([1 if o == md.FUTURE else -1 for o in path.orientations])
        ok &= orient == declared
    worst = float(np.max(ratio))
    if np.any(blocked):
        return CausalVerdict(BOUNDARY_CROSSING, worst,
                             int(np.argmax(blocked)), orientations)
    if np.all(ok):
        return CausalVerdict(VERIFIED, worst, None, orientations)
    return CausalVerdict(VIOLATED, worst, int(np.argmax(~ok)), orientations)


# ---------------------------------------------------------------------------
# Lengths
# ---------------------------------------------------------------------------

def null_length(model, path: PiecewisePath, verify: bool = True,
                n_samples: int = DEFAULT_SAMPLES,
                margin: Optional[float] = None) -> float:
    """Sum of |tau(b_i) - tau(b_{i-1})| over the segments of a verified path."""
    if verify:
        verdict = verify_causal(model, path, n_samples=n_samples, margin=margin)
        if verdict.status != VERIFIED:
            raise NotCausal(
                f"path failed causal verification ({verdict.status}, "
                f"segment {verdict.failing_segment})"
            )
    if path.n_segments == 0:
        return 0.0
    taus = model.tau(path.breakpoints)
    return math.fsum(abs(float(d)) for d in np.diff(taus))


def _gl_rule(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)   # mapped to [0, 1]
    return _GL_CACHE[n]


def _wick_lengths_once(model, a, b, n_quad):
    nodes, weights = _gl_rule(n_quad)
    v = b - a
    pts = a[None, :, :] + nodes[:, None, None] * v[None, :, :]
    flat = pts.reshape(-1, model.dim)
    if not model.full_domain and not np.all(model.domain(flat)):
        raise OutOfDomain("quadrature node outside the model domain")
    vflat = np.broadcast_to(v, (n_quad,) + v.shape).reshape(-1, model.dim)
    w2 = md.wick_sq_batch(model, flat, vflat).reshape(n_quad, -1)
    speeds = np.sqrt(np.maximum(w2, 0.0))
    return weights @ speeds


def wick_lengths(model, a, b, quad_points: int = 16, rel_tol: float = 1e-9,
                 max_quad: int = 256) -> np.ndarray:
    """Gauss-Legendre Wick lengths of straight segments, doubling the rule
    until the relative change drops below rel_tol."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    vals = _wick_lengths_once(model, a, b, quad_points)
    n = quad_points
    while n < max_quad:
        n *= 2
        newer = _wick_lengths_once(model, a, b, n)
        change = np.max(np.abs(newer - vals) / np.maximum(np.abs(newer), 1e-300))
        vals = newer
        if change < rel_tol:
            break
    return vals


def wick_length(model, path: PiecewisePath, quad_points: int = 16) -> float:
    """Wick-rotated length of a polyline (composite Gauss-Legendre)."""
    if quad_points < 2:
        raise BadParams("quad_points must be at least 2")
    if path.n_segments == 0:
        return 0.0
    vals = wick_lengths(model, path.breakpoints[:-1], path.breakpoints[1:],
                        quad_points=quad_points)
    return math.fsum(float(x) for x in vals)


# ---------------------------------------------------------------------------
# Serialization: one breakpoint per CSV record
# ---------------------------------------------------------------------------

def path_to_csv(path: PiecewisePath, stream) -> None:
    writer = csv.writer(stream)
    writer.writerow(["segment", "orientation"]
                    + [f"c{i}" for i in range(path.breakpoints.shape[1])])
    for i, pt in enumerate(path.breakpoints):
        orient = path.orientations[i] if i < path.n_segments else ""
        writer.writerow([i, orient] + [f"{c:.17g}" for c in pt])


def path_from_csv(stream, model_label: str = "") -> PiecewisePath:
    rows = list(csv.reader(stream))
    if len(rows) < 2:
        raise BadParams("path CSV has no breakpoints")
    pts = []
    orients = []
    for row in rows[1:]:
        pts.append([float(c) for c in row[2:]])
        if row[1]:
            orients.append(row[1])
    return PiecewisePath(np.asarray(pts), tuple(orients), model_label)
