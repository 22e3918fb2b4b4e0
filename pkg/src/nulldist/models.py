"""Spacetime models in explicit charts.

A model bundles a chart domain, the metric field g, a time function tau with
its differential, and optional exact oracles for causality and the null
distance.  All evaluators are vectorized: they accept an (n, dim) array of
chart points and return batched results.  The first coordinate is the
distinguished time coordinate for every catalog entry.

Catalog entries:

    minkowski             flat R^{1,n}, tau = t, exact oracles installed
    minkowski_exp         flat, tau = exp(t)
    minkowski_sqrt        flat, tau = sgn(t) sqrt(|t|)  (not Lipschitz at t=0)
    slit_minkowski_cubic  flat R^2 minus the closed ray {t=0, x>=0}, cubic tau
    warped_ads            cosh^2(x)(-dt^2+dy^2)+dx^2 with tau = sech(x) t + t^3
    slice_incomplete_warp -dt^2 + f^2(x) dx^2 with f = 1/(1+x^2), tau = t
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BadParams, NotTemporal, OutOfDomain, UnknownModel, ZeroVector

# Relative tolerance band for classifying a vector as null.
TOL_NULL = 1e-12

# Central finite-difference step for dtau when no closed form is supplied.
FD_STEP = 1e-6

TIMELIKE = "timelike"
NULL = "null"
SPACELIKE = "spacelike"
FUTURE = "future"
PAST = "past"
NONE = "none"


def as_points(x, dim: int) -> np.ndarray:
    """Promote a single chart point or an array of points to shape (n, dim)."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise BadParams(f"expected points of dimension {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise BadParams("chart point has non-finite entries")
    return arr


@dataclass(frozen=True)
class VectorClass:
    causal_type: str  # timelike | null | spacelike
    orientation: str  # future | past | none


@dataclass(frozen=True)
class AuxiliaryMetric:
    """Riemannian comparison metric h; evaluator maps (n,dim) -> (n,dim,dim) SPD."""

    label: str
    evaluator: Callable[[np.ndarray], np.ndarray]

    def at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = self.evaluator(np.atleast_2d(x))
        return h[0] if single else h

    def norm(self, x, v) -> float:
        h = self.at(np.asarray(x, dtype=float))
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(v @ h @ v))


def scaled_euclidean(dim: int, scale: float = 1.0, label: str | None = None) -> AuxiliaryMetric:
    """h = scale * identity; scale multiplies the metric matrix, not lengths."""
    if scale <= 0:
        raise BadParams("metric scale must be positive")
    mat = scale * np.eye(dim)

    def evaluator(x):
        x = np.atleast_2d(x)
        return np.broadcast_to(mat, (x.shape[0], dim, dim))

    return AuxiliaryMetric(label or f"{scale}*euclidean", evaluator)


@dataclass(frozen=True)
class SpacetimeModel:
    """Explicit-chart spacetime with a time function.

    metric/tau/dtau/domain are batched evaluators over (n, dim) point arrays.
    ``constant_metric`` marks a globally constant coefficient matrix, which
    lets causality checks use margin 0 safely.  ``segment_blocked`` is an
    analytic straight-segment/excluded-set intersection test (used by the
    slit model); it takes two (n, dim) endpoint arrays.
    """

    dim: int
    label: str
    metric: Callable[[np.ndarray], np.ndarray]
    tau: Callable[[np.ndarray], np.ndarray]
    dtau: Optional[Callable[[np.ndarray], np.ndarray]]
    domain: Callable[[np.ndarray], np.ndarray]
    constant_metric: bool = False
    full_domain: bool = True
    causal_oracle: Optional[Callable] = None
    nulldist_oracle: Optional[Callable] = None
    segment_blocked: Optional[Callable] = None
    sample_box: Optional[tuple] = None
    flags: tuple = ()
    params: dict = field(default_factory=dict)

    # -- scalar conveniences -------------------------------------------------
    def tau_at(self, x) -> float:
        return float(self.tau(as_points(x, self.dim))[0])

    def metric_at(self, x) -> np.ndarray:
        return self.metric(as_points(x, self.dim))[0]

    def dtau_at(self, x) -> np.ndarray:
        return self.dtau_batch(as_points(x, self.dim))[0]

    def in_domain(self, x) -> bool:
        return bool(self.domain(as_points(x, self.dim))[0])

    def dtau_batch(self, xs: np.ndarray) -> np.ndarray:
        if self.dtau is not None:
            return self.dtau(xs)
        return finite_difference_dtau(self, xs)


def finite_difference_dtau(model: SpacetimeModel, xs: np.ndarray) -> np.ndarray:
    """Central differences with step h = FD_STEP * (1 + |x|_inf), per point."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    h = FD_STEP * (1.0 + np.max(np.abs(xs), axis=1))
    out = np.empty_like(xs)
    for i in range(model.dim):
        step = np.zeros_like(xs)
        step[:, i] = h
        out[:, i] = (model.tau(xs + step) - model.tau(xs - step)) / (2.0 * h)
    return out


# ---------------------------------------------------------------------------
# Batched quadratic-form helpers shared by paths/lattice/probes.
# ---------------------------------------------------------------------------

def gvv(model: SpacetimeModel, xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """g_x(v, v) for matched batches of points and vectors."""
    g = model.metric(xs)
    return np.einsum("aij,ai,aj->a", g, vs, vs)


def causal_scale(model: SpacetimeModel, xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """|v|^T |g(x)| |v|: positive quadratic scale for margin/tolerance bands.

    Conformally invariant under constant rescaling of g, defined at points
    where tau fails to be temporal, and equal to the Wick norm squared on
    lapse-normalized constant-coefficient models.
    """
    g = np.abs(model.metric(xs))
    va = np.abs(vs)
    return np.einsum("aij,ai,aj->a", g, va, va)


def dtau_v(model: SpacetimeModel, xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
    return np.einsum("ai,ai->a", model.dtau_batch(xs), vs)


def grad_tau_norm_sq(model: SpacetimeModel, xs: np.ndarray) -> np.ndarray:
    """g(grad tau, grad tau) = dtau . g^{-1} . dtau, batched."""
    g = model.metric(xs)
    dt = model.dtau_batch(xs)
    sol = np.linalg.solve(g, dt[..., None])[..., 0]
    return np.einsum("ai,ai->a", dt, sol)


def lapse_batch(model: SpacetimeModel, xs: np.ndarray) -> np.ndarray:
    """alpha = |g(grad tau, grad tau)|^{-1}; raises NotTemporal on failure."""
    gnn = grad_tau_norm_sq(model, xs)
    if np.any(gnn >= 0):
        raise NotTemporal(
            f"tau is not temporal at a sampled point of model '{model.label}'"
        )
    return -1.0 / gnn


def wick_sq_batch(model: SpacetimeModel, xs: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Wick-rotated squared norm g_W(v,v) = g(v,v)/alpha + 2 (dtau(v))^2."""
    alpha = lapse_batch(model, xs)
    return gvv(model, xs, vs) / alpha + 2.0 * dtau_v(model, xs, vs) ** 2


# ---------------------------------------------------------------------------
# Pointwise operations
# ---------------------------------------------------------------------------

def classify_vector(model: SpacetimeModel, x, v, tol_null: float = TOL_NULL) -> VectorClass:
    """Classify a tangent vector by the sign of g(v,v) with a null band.

    Orientation comes from the sign of dtau(v) and is ``none`` exactly for
    spacelike vectors.
    """
    xs = as_points(x, model.dim)
    vv = np.asarray(v, dtype=float)[None, :]
    if not model.domain(xs)[0]:
        raise OutOfDomain(f"point outside the domain of '{model.label}'")
    if np.linalg.norm(vv) == 0.0:
        raise ZeroVector("cannot classify the zero vector")
    q = gvv(model, xs, vv)[0]
    scale = causal_scale(model, xs, vv)[0]
    if abs(q) <= tol_null * scale:
        ctype = NULL
    elif q < 0:
        ctype = TIMELIKE
    else:
        ctype = SPACELIKE
    if ctype == SPACELIKE:
        return VectorClass(SPACELIKE, NONE)
    s = dtau_v(model, xs, vv)[0]
    orient = FUTURE if s > 0 else (PAST if s < 0 else NONE)
    return VectorClass(ctype, orient)


def lapse_alpha(model: SpacetimeModel, x) -> float:
    """Lapse alpha(x) of the orthogonal decomposition; > 0 where tau is temporal."""
    xs = as_points(x, model.dim)
    if not model.domain(xs)[0]:
        raise OutOfDomain(f"point outside the domain of '{model.label}'")
    return float(lapse_batch(model, xs)[0])


def wick_norm_sq(model: SpacetimeModel, x, v) -> float:
    """g_W(v, v) after normalizing the lapse to 1; >= 0, zero only for v = 0."""
    xs = as_points(x, model.dim)
    if not model.domain(xs)[0]:
        raise OutOfDomain(f"point outside the domain of '{model.label}'")
    vv = np.asarray(v, dtype=float)[None, :]
    return float(wick_sq_batch(model, xs, vv)[0])


def conformal_scale(model: SpacetimeModel, factor: float) -> SpacetimeModel:
    """Model with metric multiplied by a positive constant (same tau, oracles)."""
    if factor <= 0:
        raise BadParams("conformal factor must be positive")
    base_metric = model.metric

    def metric(xs):
        return factor * base_metric(xs)

    return SpacetimeModel(
        dim=model.dim,
        label=f"{model.label}*{factor}",
        metric=metric,
        tau=model.tau,
        dtau=model.dtau,
        domain=model.domain,
        constant_metric=model.constant_metric,
        full_domain=model.full_domain,
        causal_oracle=model.causal_oracle,
        nulldist_oracle=model.nulldist_oracle,
        segment_blocked=model.segment_blocked,
        sample_box=model.sample_box,
        flags=model.flags,
        params=dict(model.params),
    )


def with_time_function(model: SpacetimeModel, tau, dtau, label: str) -> SpacetimeModel:
    """Same chart and metric, different time function (for bi-Lipschitz scans)."""
    return SpacetimeModel(
        dim=model.dim,
        label=label,
        metric=model.metric,
        tau=tau,
        dtau=dtau,
        domain=model.domain,
        constant_metric=model.constant_metric,
        full_domain=model.full_domain,
        causal_oracle=model.causal_oracle,
        nulldist_oracle=None,
        segment_blocked=model.segment_blocked,
        sample_box=model.sample_box,
        flags=model.flags,
        params=dict(model.params),
    )


# ---------------------------------------------------------------------------
# Catalog
# ---------------------------------------------------------------------------

def _constant_metric_evaluator(mat: np.ndarray):
    mat = np.asarray(mat, dtype=float)

    def metric(xs):
        xs = np.atleast_2d(xs)
        return np.broadcast_to(mat, (xs.shape[0],) + mat.shape)

    return metric


def _full_domain(xs):
    xs = np.atleast_2d(xs)
    return np.ones(xs.shape[0], dtype=bool)


def _minkowski_causal_oracle(p, q):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    return bool(float(np.linalg.norm(q[1:] - p[1:])) <= q[0] - p[0])


def _make_minkowski(n: int, tau_kind: str) -> SpacetimeModel:
    if n < 1:
        raise BadParams("minkowski requires n >= 1 spatial dimensions")
    dim = n + 1
    mat = np.diag([-1.0] + [1.0] * n)

    if tau_kind == "t":
        tau = lambda xs: np.atleast_2d(xs)[:, 0].copy()

        def dtau(xs):
            xs = np.atleast_2d(xs)
            out = np.zeros_like(xs)
            out[:, 0] = 1.0
            return out

        def nulldist_oracle(p, q):
            p = np.asarray(p, float)
            q = np.asarray(q, float)
            return max(abs(q[0] - p[0]), float(np.linalg.norm(q[1:] - p[1:])))

        label, flags = "minkowski", ()
    elif tau_kind == "exp":
        tau = lambda xs: np.exp(np.atleast_2d(xs)[:, 0])

        def dtau(xs):
            xs = np.atleast_2d(xs)
            out = np.zeros_like(xs)
            out[:, 0] = np.exp(xs[:, 0])
            return out

        def nulldist_oracle(p, q):
            if _minkowski_causal_oracle(p, q) or _minkowski_causal_oracle(q, p):
                return abs(math.exp(q[0]) - math.exp(p[0]))
            return None

        label, flags = "minkowski_exp", ("not_globally_lipschitz",)
    elif tau_kind == "sqrt":
        def tau(xs):
            t = np.atleast_2d(xs)[:, 0]
            return np.sign(t) * np.sqrt(np.abs(t))

        def dtau(xs):
            # derivative blows up at t = 0; floor |t| to keep the sign usable
            xs = np.atleast_2d(xs)
            out = np.zeros_like(xs)
            t = np.maximum(np.abs(xs[:, 0]), 1e-300)
            out[:, 0] = 0.5 / np.sqrt(t)
            return out

        def nulldist_oracle(p, q):
            if _minkowski_causal_oracle(p, q) or _minkowski_causal_oracle(q, p):
                tp = math.copysign(math.sqrt(abs(p[0])), p[0])
                tq = math.copysign(math.sqrt(abs(q[0])), q[0])
                return abs(tq - tp)
            return None

        label, flags = "minkowski_sqrt", ("not_lipschitz", "not_temporal_at_t0")
    else:  # pragma: no cover
        raise UnknownModel(tau_kind)

    return SpacetimeModel(
        dim=dim,
        label=label,
        metric=_constant_metric_evaluator(mat),
        tau=tau,
        dtau=dtau,
        domain=_full_domain,
        constant_metric=True,
        full_domain=True,
        causal_oracle=_minkowski_causal_oracle,
        nulldist_oracle=nulldist_oracle,
        sample_box=tuple(((-2.0, 2.0),) * dim),
        flags=flags,
        params={"n": n},
    )


def _make_slit_minkowski_cubic() -> SpacetimeModel:
    mat = np.diag([-1.0, 1.0])

    def domain(xs):
        xs = np.atleast_2d(xs)
        return ~((xs[:, 0] == 0.0) & (xs[:, 1] >= 0.0))

    def tau(xs):
        xs = np.atleast_2d(xs)
        t, x = xs[:, 0], xs[:, 1]
        return np.where(x > 0.0, t**3, t**3 + t * x**2)

    def dtau(xs):
        xs = np.atleast_2d(xs)
        t, x = xs[:, 0], xs[:, 1]
        neg = x <= 0.0
        out = np.empty_like(xs)
        out[:, 0] = 3.0 * t**2 + np.where(neg, x**2, 0.0)
        out[:, 1] = np.where(neg, 2.0 * t * x, 0.0)
        return out

    def segment_blocked(a, b):
        # straight segment crosses the removed closed ray {t = 0, x >= 0}
        a = np.atleast_2d(a)
        b = np.atleast_2d(b)
        ta, tb = a[:, 0], b[:, 0]
        cross = ta * tb < 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(cross, -ta / (tb - ta), 0.0)
        xstar = a[:, 1] + frac * (b[:, 1] - a[:, 1])
        return cross & (xstar >= 0.0)

    def causal_oracle(p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        if np.array_equal(p, q):
            return True
        dt = q[0] - p[0]
        if bool(dt < abs(q[1] - p[1])):
            return False
        if p[0] <= 0.0 <= q[0]:
            # must cross t = 0 strictly left of the slit
            return bool(max(p[1] + p[0], q[1] - q[0]) < 0.0)
        return True

    def tau_scalar(t, x):
        return t**3 if x > 0 else t**3 + t * x**2

    def nulldist_oracle(p, q):
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        tp, xp = p
        tq, xq = q
        dtau_abs = abs(tau_scalar(tq, xq) - tau_scalar(tp, xp))
        if causal_oracle(p, q) or causal_oracle(q, p):
            return dtau_abs
        if xp > 0.0 and xq > 0.0 and tp * tq < 0.0:
            # barrier-hugging minimizing sequences realize the tau gap
            return dtau_abs
        return None

    return SpacetimeModel(
        dim=2,
        label="slit_minkowski_cubic",
        metric=_constant_metric_evaluator(mat),
        tau=tau,
        dtau=dtau,
        domain=domain,
        constant_metric=True,
        full_domain=False,
        causal_oracle=causal_oracle,
        nulldist_oracle=nulldist_oracle,
        segment_blocked=segment_blocked,
        sample_box=((-2.0, 2.0), (-2.0, 2.0)),
        flags=("excluded_ray",),
    )


def _make_warped_ads() -> SpacetimeModel:
    def metric(xs):
        xs = np.atleast_2d(xs)
        c2 = np.cosh(xs[:, 1]) ** 2
        g = np.zeros((xs.shape[0], 3, 3))
        g[:, 0, 0] = -c2
        g[:, 1, 1] = 1.0
        g[:, 2, 2] = c2
        return g

    def tau(xs):
        xs = np.atleast_2d(xs)
        t, x = xs[:, 0], xs[:, 1]
        return t / np.cosh(x) + t**3

    def dtau(xs):
        xs = np.atleast_2d(xs)
        t, x = xs[:, 0], xs[:, 1]
        sech = 1.0 / np.cosh(x)
        out = np.zeros_like(xs)
        out[:, 0] = sech + 3.0 * t**2
        out[:, 1] = -t * sech * np.tanh(x)
        return out

    def causal_oracle(p, q):
        # projection to the {x=0} Minkowski plane stays causal, so
        # dt >= |dy| is necessary; sufficient for in-plane pairs.
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        if np.array_equal(p, q):
            return True
        dt = q[0] - p[0]
        dy = abs(q[2] - p[2])
        if dt < dy:
            return False
        if p[1] == q[1]:
            return True
        return None

    def nulldist_oracle(p, q):
        fwd = causal_oracle(p, q)
        bwd = causal_oracle(q, p)
        if fwd is True or bwd is True:
            tau_p = p[0] / math.cosh(p[1]) + p[0] ** 3
            tau_q = q[0] / math.cosh(q[1]) + q[0] ** 3
            return abs(tau_q - tau_p)
        return None

    # tau is genuinely temporal only for |x| < arccosh(12); the default
    # sampling box stays inside that strip.
    return SpacetimeModel(
        dim=3,
        label="warped_ads",
        metric=metric,
        tau=tau,
        dtau=dtau,
        domain=_full_domain,
        constant_metric=False,
        full_domain=True,
        causal_oracle=causal_oracle,
        nulldist_oracle=nulldist_oracle,
        sample_box=((-1.0, 1.0), (-2.0, 2.0), (-2.0, 2.0)),
        flags=("temporal_on_strip",),
    )


def _make_slice_incomplete_warp() -> SpacetimeModel:
    def fiber(x):
        return 1.0 / (1.0 + x**2)

    def metric(xs):
        xs = np.atleast_2d(xs)
        g = np.zeros((xs.shape[0], 2, 2))
        g[:, 0, 0] = -1.0
        g[:, 1, 1] = fiber(xs[:, 1]) ** 2
        return g

    tau = lambda xs: np.atleast_2d(xs)[:, 0].copy()

    def dtau(xs):
        xs = np.atleast_2d(xs)
        out = np.zeros_like(xs)
        out[:, 0] = 1.0
        return out

    def fiber_distance(xp, xq):
        return abs(math.atan(xq) - math.atan(xp))

    def causal_oracle(p, q):
        # minimal time to sweep x is the fiber distance (f independent of t)
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        return bool(q[0] - p[0] >= fiber_distance(p[1], q[1]))

    def nulldist_oracle(p, q):
        return max(abs(q[0] - p[0]), fiber_distance(p[1], q[1]))

    return SpacetimeModel(
        dim=2,
        label="slice_incomplete_warp",
        metric=metric,
        tau=tau,
        dtau=dtau,
        domain=_full_domain,
        constant_metric=False,
        full_domain=True,
        causal_oracle=causal_oracle,
        nulldist_oracle=nulldist_oracle,
        sample_box=((-2.0, 2.0), (-2.0, 2.0)),
        flags=("finite_fiber_length",),
    )


CATALOG_NAMES = (
    "minkowski",
    "minkowski_exp",
    "minkowski_sqrt",
    "slit_minkowski_cubic",
    "warped_ads",
    "slice_incomplete_warp",
)


def catalog(name: str, **params) -> SpacetimeModel:
    """Construct a catalog model by name; see the module docstring."""
    if name == "minkowski":
        return _make_minkowski(int(params.pop("n", 1)), "t")
    if name == "minkowski_exp":
        return _make_minkowski(int(params.pop("n", 1)), "exp")
    if name == "minkowski_sqrt":
        return _make_minkowski(int(params.pop("n", 1)), "sqrt")
    if name == "slit_minkowski_cubic":
        return _make_slit_minkowski_cubic()
    if name == "warped_ads":
        return _make_warped_ads()
    if name == "slice_incomplete_warp":
        return _make_slice_incomplete_warp()
    raise UnknownModel(f"unknown catalog model '{name}'")
