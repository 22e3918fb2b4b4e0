"""Closed-form witness curves for regimes no finite lattice can reach.

Each constructor returns a WitnessResult whose path is an honest verified
piecewise causal polyline and whose paper_bound is a true upper bound of the
construction, so slack = paper_bound - null_len stays nonnegative.  Exactly
null zigzags in variable-coefficient metrics are tilted into the cone by a
factor (1 + TILT) so the strict verification margin accepts them; the tilt
changes null lengths at the 1e-9 scale, far inside every quoted bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import models as md
from . import paths as pth
from .errors import BadParams, NotCausal, OutOfRange

TILT = 1e-6
GEODESIC_CHORDS = 4096
GEODESIC_CHORD_CAP = 2 ** 18


@dataclass
class WitnessResult:
    path: pth.PiecewisePath
    null_len: float
    paper_bound: float
    slack: float
    params: dict = field(default_factory=dict)
    causal: bool = True
    verdict: Optional[pth.CausalVerdict] = None


def _finish(model, points, paper_bound, params, margin=None,
            require_causal=True) -> WitnessResult:
    path = pth.path_from_breakpoints(model, points)
    verdict = pth.verify_causal(model, path, margin=margin)
    causal = verdict.status == pth.VERIFIED
    if require_causal and not causal:
        raise NotCausal(
            f"witness path failed verification ({verdict.status}, "
            f"segment {verdict.failing_segment})"
        )
    null_len = pth.null_length(model, path, verify=False) if causal else math.nan
    slack = paper_bound - null_len if causal else math.nan
    return WitnessResult(path, null_len, paper_bound, slack, params, causal, verdict)


# ---------------------------------------------------------------------------
# Dyadic tent functions and the zigzag deformation
# ---------------------------------------------------------------------------

def tent_function(n: int, L: float, s) -> np.ndarray | float:
    """Dyadic sawtooth with 2^n teeth on [0, L], peak L / 2^(n+1), |f'| = 1 a.e."""
    if n < 0 or L <= 0:
        raise OutOfRange("need n >= 0 and L > 0")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < -1e-12 * L) or np.any(s_arr > L * (1 + 1e-12)):
        raise OutOfRange("tent function argument outside [0, L]")
    u = np.clip(s_arr, 0.0, L) * (2 ** n) / L
    frac = u - np.floor(u)
    vals = (L / 2 ** n) * np.minimum(frac, 1.0 - frac)
    # honor the exact zero at s = L (frac wraps to 0 there already)
    return vals if vals.ndim else float(vals)


def tent_breakpoints(n: int, L: float) -> np.ndarray:
    """The 2^(n+1) + 1 vertex abscissae of the sawtooth."""
    return np.linspace(0.0, L, 2 ** (n + 1) + 1)


def _as_polyline(gamma) -> np.ndarray:
    if isinstance(gamma, pth.PiecewisePath):
        return gamma.breakpoints
    arr = np.asarray(gamma, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise BadParams("gamma must be a polyline with at least two points")
    return arr


def wick2_deformation(model, gamma, n: int) -> WitnessResult:
    """Tent-deformed curve: time component shifted by 3 f_n along
    Wick-arclength, spatial components untouched.

    Requires a lapse-normalized model whose tau is the time coordinate
    (the flat catalog entry with tau = t).
    """
    pts = _as_polyline(gamma)
    taus = model.tau(pts)
    if not (model.constant_metric and np.allclose(taus, pts[:, 0], atol=1e-12)):
        raise BadParams("deformation needs tau = time coordinate with unit lapse")
    segs = np.diff(pts, axis=0)
    seg_len = np.sqrt(md.wick_sq_batch(model, pts[:-1], segs))
    if np.any(seg_len == 0.0):
        raise BadParams("gamma has a zero-length segment")
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    L = float(cum[-1])
    if L <= 0:
        raise BadParams("gamma has zero Wick length")

    s_values = np.union1d(tent_breakpoints(n, L), cum)

    def gamma_at(s):
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(segs) - 1)
        local = (s - cum[i]) / seg_len[i]
        return pts[i] + local[:, None] * segs[i]

    base = gamma_at(s_values)
    shift = tent_function(n, L, s_values)
    beta = base.copy()
    beta[:, 0] = base[:, 0] + 3.0 * np.asarray(shift)

    paper_bound = 4.0 * L
    result = _finish(model, beta, paper_bound, {"n": n, "L_W": L},
                     require_causal=False)
    return result


# ---------------------------------------------------------------------------
# Bounce constructions
# ---------------------------------------------------------------------------

def minkowski_bounce(model, p, q, k: int, tooth_sign: int = 1) -> WitnessResult:
    """Zigzag of 2k null segments along the straight spatial line from p to q,
    confined to a slab of height |dx| / (2k) on the tooth_sign side of the
    shared time level.  Exact null length from the model's tau."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if k < 1:
        raise BadParams("k must be >= 1")
    if np.array_equal(p, q):
        path = pth.PiecewisePath(p[None, :], (), model.label)
        return WitnessResult(path, 0.0, 0.0, 0.0, {"k": k})
    if p[0] != q[0]:
        raise BadParams("bounce endpoints must share the time level")
    g0 = model.metric_at(p)
    if not (model.constant_metric and np.allclose(g0, np.diag(np.diag(g0)))
            and np.allclose(np.diag(g0), [-1.0] + [1.0] * (model.dim - 1))):
        raise BadParams("bounce requires a Minkowski-type slice")
    width = float(np.linalg.norm(q[1:] - p[1:]))
    h = width / (2 * k)
    fracs = np.linspace(0.0, 1.0, 2 * k + 1)
    points = p[None, :] + fracs[:, None] * (q - p)[None, :]
    points[1::2, 0] += tooth_sign * h
    taus = model.tau(points)
    paper_bound = 2 * k * float(np.max(np.abs(np.diff(taus))))
    return _finish(model, points, paper_bound, {"k": k, "height": h})


def counterexK_witness(model, t_p: float, x_p: float, t_q: float, x_q: float,
                       k: int) -> WitnessResult:
    """Slit-avoiding composite through q1, q2, q3 and its mirror.

    paper_bound = t_p^3 + |t_q|^3 + 14 (x_p^3 + x_q^3) / k^2.
    """
    if not (x_p > 0 and x_q > 0 and t_q < 0 < t_p):
        raise BadParams("need x_p, x_q > 0 and t_q < 0 < t_p")
    if k <= max(x_p / t_p, x_q / abs(t_q)):
        raise BadParams("k too small: bounce slab would leave the valid range")
    m = min(x_p, x_q) / k
    q1 = np.array([x_p / k, x_p])
    q2 = np.array([x_p / k, 0.0])
    q3 = np.array([0.0, -m])
    q2m = np.array([-x_q / k, 0.0])
    q1m = np.array([-x_q / k, x_q])

    upper = minkowski_bounce(model, q1, q2, k, tooth_sign=+1)
    lower = minkowski_bounce(model, q2m, q1m, k, tooth_sign=-1)

    points = np.vstack([
        np.array([[t_p, x_p]]),
        upper.path.breakpoints,
        q3[None, :],
        lower.path.breakpoints,
        np.array([[t_q, x_q]]),
    ])
    paper_bound = t_p ** 3 + abs(t_q) ** 3 + 14.0 * (x_p ** 3 + x_q ** 3) / k ** 2
    return _finish(model, points, paper_bound,
                   {"t_p": t_p, "x_p": x_p, "t_q": t_q, "x_q": x_q, "k": k})


# ---------------------------------------------------------------------------
# Warped-AdS constructions
# ---------------------------------------------------------------------------

def ads_null_geodesic(t0: float, s, sign: int = 1):
    """Null geodesic of cosh^2(x)(-dt^2) + dx^2 through (t0, 0):
    t(s) = 2 arctan(tanh(s/2)) + t0, x(s) = sign * s."""
    s_arr = np.asarray(s, dtype=float)
    t = 2.0 * np.arctan(np.tanh(0.5 * s_arr)) + t0
    x = sign * s_arr
    if s_arr.ndim == 0:
        return float(t), float(x)
    return t, x


def _ascent_breakpoints(s: float, m: int, y: float, t_start: float):
    """Circumscribed polyline of the right-going null geodesic from
    (t_start, 0): chord slopes (1 + TILT) * sech(x_i) stay causal for the
    cosh^2 warped metric because sech is decreasing."""
    x = np.linspace(0.0, s, m + 1)
    slopes = (1.0 + TILT) / np.cosh(x[:-1])
    t = t_start + np.concatenate([[0.0], np.cumsum(slopes * np.diff(x))])
    pts = np.column_stack([t, x, np.full(m + 1, y)])
    return pts


def counterexsimple_witness(model, y_p: float, y_q: float, s: float, k: int,
                            m: int = GEODESIC_CHORDS) -> WitnessResult:
    """Escape-to-large-x composite between p = (-pi/2, 0, y_p) and
    q = (pi/2, 0, y_q): near-null ascent to the {x = s} plane, a 2k-segment
    bounce across y, and the time-mirrored descent.

    paper_bound = tau(q) - tau(p) + 2k (|dy|^3/k^3 + sech(s) |dy|/k).
    """
    dy = abs(y_q - y_p)
    if dy <= math.pi:
        raise BadParams("need |y_p - y_q| > pi")
    if s <= 0 or k < 1:
        raise BadParams("need s > 0 and k >= 1")
    if model.label != "warped_ads":
        raise BadParams("witness is specific to the warped_ads model")

    p = np.array([-math.pi / 2.0, 0.0, y_p])
    q = np.array([math.pi / 2.0, 0.0, y_q])
    tau_p = model.tau_at(p)
    tau_q = model.tau_at(q)

    chords = m
    while True:
        ascent = _ascent_breakpoints(s, chords, y_p, -math.pi / 2.0)
        t_top = ascent[-1, 0]

        # bounce in the {x = s} plane, teeth tilted into the cone
        h = (1.0 + TILT) * dy / (2 * k)
        fracs = np.linspace(0.0, 1.0, 2 * k + 1)
        zig = np.column_stack([
            np.zeros(2 * k + 1),
            np.full(2 * k + 1, s),
            y_p + fracs * (y_q - y_p),
        ])
        zig[1::2, 0] += h

        descent = _ascent_breakpoints(s, chords, y_q, -math.pi / 2.0)
        descent = descent[::-1].copy()
        descent[:, 0] = -descent[:, 0]

        points = np.vstack([
            ascent,
            np.array([[0.0, s, y_p]]),
            zig,
            np.array([[-t_top, s, y_q]]),
            descent,
        ])
        paper_bound = (tau_q - tau_p) + 2 * k * (
            dy ** 3 / k ** 3 + dy / (k * math.cosh(s))
        )
        try:
            return _finish(model, points, paper_bound,
                           {"y_p": y_p, "y_q": y_q, "s": s, "k": k, "m": chords})
        except NotCausal:
            if chords >= GEODESIC_CHORD_CAP:
                raise
            chords *= 2
