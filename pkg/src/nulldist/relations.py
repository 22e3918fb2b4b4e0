"""Causal relation J+ and the null-distance relation R+.

A pair (p, q) belongs to R+ when the null distance equals tau(q) - tau(p).
Numerically we certify membership up to a tolerance from any upper bound on
the distance, since upper >= d >= delta tau always holds.  "no" verdicts for
J+ come only from exact oracles; lattices certify reachability, never its
absence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import estimates as est
from . import lattice as lt
from . import models as md
from .errors import NullDistError

ENCODES = "ENCODES"
VIOLATES = "VIOLATES"
INCONCLUSIVE = "INCONCLUSIVE"

YES = "yes"
NO = "no"
UNKNOWN = "unknown"


def default_rhat_tol(dtau: float) -> float:
    # relative tolerance tracks magnitude across models with cubic tau
    return 1e-6 * (1.0 + abs(dtau))


@dataclass(frozen=True)
class RelationVerdict:
    pair: tuple
    j_plus: str                 # yes | no | unknown
    j_source: str               # oracle | lattice | none
    r_hat: bool
    r_hat_gap: float
    tol: float
    tau_p: float = math.nan
    tau_q: float = math.nan


@dataclass(frozen=True)
class LatticeOptions:
    delta: float = 0.125
    stencil: int = 2
    pad: float = 1.0
    n_samples: int = 33
    node_cap: int = lt.NODE_CAP


def jplus_verdict(model, p, q, lattice_opts: Optional[LatticeOptions] = None):
    """(j_plus, source): oracle first, then directed lattice reachability."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if model.causal_oracle is not None:
        ans = model.causal_oracle(p, q)
        if ans is True:
            return YES, "oracle"
        if ans is False:
            return NO, "oracle"
    opts = lattice_opts or LatticeOptions()
    lo = np.minimum(p, q) - opts.pad
    hi = np.maximum(p, q) + opts.pad
    lo = np.floor(lo / opts.delta) * opts.delta
    hi = np.ceil(hi / opts.delta) * opts.delta
    region = tuple((float(a), float(b)) for a, b in zip(lo, hi))
    try:
        lat = lt.build(model, lt.LatticeSpec(region, opts.delta, opts.stencil),
                       n_samples=opts.n_samples, node_cap=opts.node_cap)
        lat = lat.with_endpoints([p, q], n_samples=opts.n_samples)
        if lat.future_reachable(p, q):
            return YES, "lattice"
    except NullDistError:
        pass
    return UNKNOWN, "none"


def _upper_value(upper) -> float:
    if hasattr(upper, "upper"):
        return float(upper.upper)
    if hasattr(upper, "null_len"):
        return float(upper.null_len)
    return float(upper)


def rhat_member(model, p, q, upper, tol: Optional[float] = None):
    """(member, gap) from an upper bound for d(p, q).

    gap = upper - (tau(q) - tau(p)); a small gap certifies membership up to
    tol because upper >= d >= delta tau.
    """
    dtau = model.tau_at(q) - model.tau_at(p)
    if tol is None:
        tol = default_rhat_tol(dtau)
    value = _upper_value(upper)
    gap = value - dtau
    if dtau < 0:
        return False, gap
    return gap <= tol, gap


@dataclass(frozen=True)
class EncodingOptions:
    tol: Optional[float] = None
    upper_fn: Optional[Callable] = None       # (p, q) -> upper bound
    estimate_opts: est.EstimateOptions = est.EstimateOptions(levels=4)
    lattice_opts: Optional[LatticeOptions] = None


@dataclass
class EncodingReport:
    rows: list
    summary: str


def encoding_report(model, pairs: Sequence, opts: EncodingOptions = EncodingOptions()) -> EncodingReport:
    """Per-pair verdicts plus a summary flag.

    VIOLATES needs an oracle-certified non-causal pair inside R+;
    INCONCLUSIVE marks R+ members whose causal status stayed unknown.
    """
    rows = []
    violated = False
    undecided_member = False
    for p, q in pairs:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        j_plus, j_source = jplus_verdict(model, p, q, opts.lattice_opts)
        if opts.upper_fn is not None:
            upper = opts.upper_fn(p, q)
        else:
            oracle = est.exact_oracle(model, p, q)
            if oracle is not None:
                upper = oracle
            else:
                upper = est.estimate(model, p, q, opts.estimate_opts).upper
        member, gap = rhat_member(model, p, q, upper, opts.tol)
        dtau = model.tau_at(q) - model.tau_at(p)
        tol = opts.tol if opts.tol is not None else default_rhat_tol(dtau)
        rows.append(RelationVerdict(
            pair=(tuple(p), tuple(q)),
            j_plus=j_plus,
            j_source=j_source,
            r_hat=member,
            r_hat_gap=gap,
            tol=tol,
            tau_p=model.tau_at(p),
            tau_q=model.tau_at(q),
        ))
        if member and j_plus == NO and j_source == "oracle":
            violated = True
        elif member and j_plus == UNKNOWN:
            undecided_member = True
    if violated:
        summary = VIOLATES
    elif undecided_member:
        summary = INCONCLUSIVE
    else:
        summary = ENCODES
    return EncodingReport(rows, summary)
