"""Causal lattices: grid graphs of verified causal segments.

Nodes are the grid points of an axis-aligned box that satisfy the model's
domain predicate, enumerated in lexicographic coordinate order.  Undirected
edges connect nodes along primitive stencil offsets (Chebyshev radius <= r,
gcd-reduced) whose straight segments pass causal verification; each edge is
weighted by |delta tau| and tagged with its future direction.  Shortest-path
queries run over scipy's csgraph machinery; a finished lattice is immutable
and safe for concurrent queries.
"""

from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, dijkstra

from . import models as md
from . import paths as pth
from .errors import BadParams, EmptyRegion, TooLarge, Unreachable

NODE_CAP = 5_000_000
_PAIR_CHUNK = 262_144


@dataclass(frozen=True)
class LatticeSpec:
    """Axis-aligned box, spacing delta, and stencil radius."""

    region: tuple            # per-coordinate (lo, hi)
    spacing: float
    stencil_radius: int = 2

    def __post_init__(self):
        region = tuple((float(lo), float(hi)) for lo, hi in self.region)
        object.__setattr__(self, "region", region)
        if self.spacing <= 0:
            raise BadParams("spacing must be positive")
        if not 1 <= self.stencil_radius <= 4:
            raise BadParams("stencil radius must be in 1..4")
        for lo, hi in region:
            if hi < lo:
                raise EmptyRegion(f"region axis [{lo}, {hi}] is empty")
            steps = (hi - lo) / self.spacing
            if abs(steps - round(steps)) > 1e-9 * max(1.0, abs(steps)):
                raise BadParams("region edge lengths must be multiples of spacing")

    def axis_counts(self) -> tuple:
        return tuple(
            int(round((hi - lo) / self.spacing)) + 1 for lo, hi in self.region
        )


def stencil_offsets(dim: int, radius: int) -> np.ndarray:
    """Primitive lattice offsets with Chebyshev norm <= radius, one per
    unordered direction (lexicographically positive representative)."""
    offs = []
    for o in itertools.product(range(-radius, radius + 1), repeat=dim):
        if all(c == 0 for c in o):
            continue
        first = next(c for c in o if c != 0)
        if first < 0:
            continue
        if reduce(math.gcd, (abs(c) for c in o)) != 1:
            continue
        offs.append(o)
    offs.sort()
    return np.asarray(offs, dtype=np.int64)


class CausalLattice:
    """Immutable verified-causal grid graph.

    Attributes: nodes (n, dim) coordinates; edge arrays edge_u, edge_v,
    edge_w (|delta tau| > 0), edge_orient (+1: future points u -> v).
    Extra (off-grid) query points occupy ids >= grid_count.
    """

    def __init__(self, model, spec, nodes, id_grid, edge_u, edge_v, edge_w,
                 edge_orient, extra_points=()):
        self.model = model
        self.spec = spec
        self.model_label = model.label
        self.nodes = nodes
        self._id_grid = id_grid
        self.edge_u = edge_u
        self.edge_v = edge_v
        self.edge_w = edge_w
        self.edge_orient = edge_orient
        self.extra_points = tuple(np.asarray(p, float) for p in extra_points)
        self.grid_count = nodes.shape[0] - len(self.extra_points)
        n = nodes.shape[0]
        uu = np.concatenate([edge_u, edge_v])
        vv = np.concatenate([edge_v, edge_u])
        ww = np.concatenate([edge_w, edge_w])
        self._undirected = csr_matrix((ww, (uu, vv)), shape=(n, n))
        fu = np.where(edge_orient > 0, edge_u, edge_v)
        fv = np.where(edge_orient > 0, edge_v, edge_u)
        self._future = csr_matrix((np.ones(len(fu)), (fu, fv)), shape=(n, n))
        self._wick_w = None

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_edges(self) -> int:
        return len(self.edge_u)

    # -- node lookup ---------------------------------------------------------
    def snap(self, p) -> int:
        """Nearest grid node within delta/2 per axis; BadParams otherwise."""
        p = np.asarray(p, dtype=float)
        delta = self.spec.spacing
        counts = self.spec.axis_counts()
        idx = []
        for d, (lo, _hi) in enumerate(self.spec.region):
            i = int(round((p[d] - lo) / delta))
            if i < 0 or i >= counts[d]:
                raise BadParams("query point snaps outside the lattice region")
            idx.append(i)
        node_id = int(self._id_grid[tuple(idx)])
        if node_id < 0:
            raise BadParams("query point snaps to an excluded grid node")
        node = self.nodes[node_id]
        if np.max(np.abs(node - p)) > 0.5 * delta * (1 + 1e-9):
            raise BadParams("query point farther than delta/2 from any node")
        return node_id

    def locate(self, p) -> Optional[int]:
        """Exact match against extra points, else snap."""
        p = np.asarray(p, dtype=float)
        for k, ep in enumerate(self.extra_points):
            if np.array_equal(ep, p):
                return self.grid_count + k
        return self.snap(p)

    # -- endpoint wiring -----------------------------------------------------
    def with_endpoints(self, points, n_samples: int = pth.DEFAULT_SAMPLES,
                       margin: Optional[float] = None) -> "CausalLattice":
        """New lattice with the given points added as exact extra nodes,
        wired to all verified-causal grid neighbors within radius r*delta."""
        if margin is None:
            margin = pth.default_margin(self.model)
        pts = [np.asarray(p, dtype=float) for p in points]
        new_pts = []
        for p in pts:
            if not self.model.in_domain(p):
                raise BadParams("endpoint outside the model domain")
            if not any(np.array_equal(p, q) for q in new_pts):
                if not self._on_grid(p):
                    new_pts.append(p)
        if not new_pts:
            return self
        delta = self.spec.spacing
        radius = self.spec.stencil_radius * delta * (1 + 1e-12)
        base = self.grid_count
        nodes = np.vstack([self.nodes] + [p[None, :] for p in new_pts])
        eu = [self.edge_u]
        ev = [self.edge_v]
        ew = [self.edge_w]
        eo = [self.edge_orient]
        for k, p in enumerate(new_pts):
            pid = base + len(self.extra_points) + k
            cand = self._grid_neighbors(p, radius)
            partners = [self.nodes[c] for c in cand]
            ids = list(cand)
            for j in range(k):
                q = new_pts[j]
                if np.max(np.abs(q - p)) <= radius and not np.array_equal(q, p):
                    partners.append(q)
                    ids.append(base + len(self.extra_points) + j)
            if not partners:
                continue
            a = np.broadcast_to(p, (len(partners), p.size))
            b = np.asarray(partners)
            ok, _blocked, _ratio, orient = pth._check_segments(
                self.model, a, b, n_samples, margin
            )
            if not np.any(ok):
                continue
            ids = np.asarray(ids, dtype=np.int64)[ok]
            tau_p = self.model.tau(p[None, :])[0]
            tau_b = self.model.tau(b[ok])
            eu.append(np.full(len(ids), pid, dtype=np.int64))
            ev.append(ids)
            ew.append(np.abs(tau_b - tau_p))
            eo.append(orient[ok].astype(np.int8))
        return CausalLattice(
            self.model, self.spec, nodes, self._id_grid,
            np.concatenate(eu), np.concatenate(ev), np.concatenate(ew),
            np.concatenate(eo),
            extra_points=self.extra_points + tuple(new_pts),
        )

    def _on_grid(self, p) -> bool:
        try:
            nid = self.snap(p)
        except BadParams:
            return False
        return bool(np.max(np.abs(self.nodes[nid] - p)) == 0.0)

    def _grid_neighbors(self, p, radius) -> np.ndarray:
        delta = self.spec.spacing
        counts = self.spec.axis_counts()
        windows = []
        for d, (lo, _hi) in enumerate(self.spec.region):
            i_lo = max(0, int(math.ceil((p[d] - radius - lo) / delta - 1e-12)))
            i_hi = min(counts[d] - 1, int(math.floor((p[d] + radius - lo) / delta + 1e-12)))
            if i_hi < i_lo:
                return np.empty(0, dtype=np.int64)
            windows.append(slice(i_lo, i_hi + 1))
        ids = self._id_grid[tuple(windows)].ravel()
        ids = ids[ids >= 0]
        if ids.size == 0:
            return ids
        close = np.max(np.abs(self.nodes[ids] - p), axis=1) <= radius
        ids = ids[close]
        not_self = ~np.all(self.nodes[ids] == p, axis=1)
        return ids[not_self]

    # -- queries ---------------------------------------------------------
    def _shortest(self, graph, pid, qid):
        dist, pred = dijkstra(graph, directed=False, indices=pid,
                              return_predecessors=True)
        if not np.isfinite(dist[qid]):
            raise Unreachable(
                "no causal-lattice path between the query points "
                "(region too small or excluded-set separation)"
            )
        chain = [qid]
        while chain[-1] != pid:
            chain.append(int(pred[chain[-1]]))
        chain.reverse()
        return np.asarray(chain, dtype=np.int64)

    def null_shortest_path(self, p, q):
        """Dijkstra over |delta tau| weights; value is an upper bound for the
        region-restricted null distance and equals the returned path's null
        length."""
        pid = self.locate(p)
        qid = self.locate(q)
        if pid == qid:
            return 0.0, pth.PiecewisePath(self.nodes[pid][None, :], (), self.model_label)
        chain = self._shortest(self._undirected, pid, qid)
        pts = self.nodes[chain]
        taus = self.model.tau(pts)
        value = math.fsum(abs(float(d)) for d in np.diff(taus))
        orients = tuple(
            md.FUTURE if taus[i + 1] >= taus[i] else md.PAST
            for i in range(len(chain) - 1)
        )
        return value, pth.PiecewisePath(pts, orients, self.model_label)

    def wick_weights(self) -> np.ndarray:
        if self._wick_w is None:
            a = self.nodes[self.edge_u]
            b = self.nodes[self.edge_v]
            self._wick_w = pth.wick_lengths(self.model, a, b)
        return self._wick_w

    def wick_shortest_path(self, p, q) -> float:
        """Dijkstra with Wick edge lengths: an upper bound for d_W restricted
        to causal-edge paths (true d_W also uses non-causal curves)."""
        pid = self.locate(p)
        qid = self.locate(q)
        if pid == qid:
            return 0.0
        w = self.wick_weights()
        n = self.n_nodes
        uu = np.concatenate([self.edge_u, self.edge_v])
        vv = np.concatenate([self.edge_v, self.edge_u])
        ww = np.concatenate([w, w])
        graph = csr_matrix((ww, (uu, vv)), shape=(n, n))
        chain = self._shortest(graph, pid, qid)
        vals = pth.wick_lengths(self.model, self.nodes[chain[:-1]], self.nodes[chain[1:]])
        return math.fsum(float(x) for x in vals)

    def future_reachable(self, p, q) -> bool:
        """BFS over the directed future-edge subgraph.  True certifies
        q in J+(p) (inner approximation); False only means unreachable at
        this resolution."""
        pid = self.locate(p)
        qid = self.locate(q)
        if pid == qid:
            return True
        order = breadth_first_order(self._future, pid, directed=True,
                                    return_predecessors=False)
        return bool(np.isin(qid, order))

    # -- export ------------------------------------------------------------
    def export_csv(self, node_stream, edge_stream) -> None:
        nw = csv.writer(node_stream)
        nw.writerow(["node_id"] + [f"c{i}" for i in range(self.nodes.shape[1])])
        for i, pt in enumerate(self.nodes):
            nw.writerow([i] + [f"{c:.17g}" for c in pt])
        ew = csv.writer(edge_stream)
        ew.writerow(["u", "v", "weight", "orientation"])
        for u, v, w, o in zip(self.edge_u, self.edge_v, self.edge_w, self.edge_orient):
            ew.writerow([u, v, f"{w:.17g}", "future" if o > 0 else "past"])


def _verify_offset(model, nodes, id_grid, counts, offset, delta, n_samples, margin):
    """Candidate pairs along one offset, verified in memory-bounded chunks."""
    src_slices = []
    dst_slices = []
    for d, o in enumerate(offset):
        lo = max(0, -o)
        hi = counts[d] - max(0, o)
        src_slices.append(slice(lo, hi))
        dst_slices.append(slice(lo + o, hi + o))
    src = id_grid[tuple(src_slices)].ravel()
    dst = id_grid[tuple(dst_slices)].ravel()
    keep = (src >= 0) & (dst >= 0)
    src = src[keep]
    dst = dst[keep]
    if src.size == 0:
        empty_i = np.empty(0, dtype=np.int64)
        return empty_i, empty_i, np.empty(0), np.empty(0, dtype=np.int8)
    us, vs, ws, os_ = [], [], [], []
    for start in range(0, src.size, _PAIR_CHUNK):
        u = src[start:start + _PAIR_CHUNK]
        v = dst[start:start + _PAIR_CHUNK]
        a = nodes[u]
        b = nodes[v]
        ok, _blocked, _ratio, orient = pth._check_segments(
            model, a, b, n_samples, margin
        )
        if not np.any(ok):
            continue
        u = u[ok]
        v = v[ok]
        w = np.abs(model.tau(nodes[v]) - model.tau(nodes[u]))
        us.append(u)
        vs.append(v)
        ws.append(w)
        os_.append(orient[ok].astype(np.int8))
    if not us:
        empty_i = np.empty(0, dtype=np.int64)
        return empty_i, empty_i, np.empty(0), np.empty(0, dtype=np.int8)
    return (np.concatenate(us), np.concatenate(vs),
            np.concatenate(ws), np.concatenate(os_))


def build(model, spec: LatticeSpec, n_samples: int = pth.DEFAULT_SAMPLES,
          margin: Optional[float] = None, node_cap: int = NODE_CAP,
          threads: int = 1) -> CausalLattice:
    """Discretize region x domain into a verified causal lattice.

    Deterministic: node ids are lexicographic in coordinates, edges are
    enumerated offset-by-offset in sorted order regardless of thread count.
    """
    if margin is None:
        margin = pth.default_margin(model)
    counts = spec.axis_counts()
    total = int(np.prod(counts))
    if total > node_cap:
        raise TooLarge(f"grid would have {total} nodes (cap {node_cap})")
    axes = [
        lo + spec.spacing * np.arange(c)
        for (lo, _hi), c in zip(spec.region, counts)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid_pts = np.stack([m.ravel() for m in mesh], axis=1)
    inside = model.domain(grid_pts)
    n_nodes = int(np.count_nonzero(inside))
    if n_nodes == 0:
        raise EmptyRegion("no grid node satisfies the domain predicate")
    ids = np.cumsum(inside) - 1
    id_grid = np.where(inside, ids, -1).reshape(counts).astype(np.int64)
    nodes = grid_pts[inside]

    offsets = stencil_offsets(model.dim, spec.stencil_radius)

    def run(off):
        return _verify_offset(model, nodes, id_grid, counts, off,
                              spec.spacing, n_samples, margin)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, offsets))
    else:
        results = [run(off) for off in offsets]

    edge_u = np.concatenate([r[0] for r in results])
    edge_v = np.concatenate([r[1] for r in results])
    edge_w = np.concatenate([r[2] for r in results])
    edge_o = np.concatenate([r[3] for r in results])
    if edge_w.size and not np.all(edge_w > 0.0):
        raise AssertionError("causal edge with zero tau increment")
    return CausalLattice(model, spec, nodes, id_grid,
                         edge_u, edge_v, edge_w, edge_o)
