"""Loop measures on a killed graph, a brute-force enumeration oracle and
exact samplers of the random-walk loop soup."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import kernels
from .lattice import PlanarGraph
from .metrics import Polyline, bbox_diameter_bounds, diameter

DEFAULT_CAP = 10**8


# --------------------------------------------------------------------------
# loops

def canonical_rotation(seq) -> np.ndarray:
    """Lexicographically least rotation of a cyclic vertex sequence."""
    s = np.ascontiguousarray(seq, dtype=np.int64)
    if s.size <= 1:
        return s.copy()
    k = kernels.least_rotation(s)
    return np.roll(s, -k)


def _cyclic(loop) -> np.ndarray:
    # accept closed (v0..vp, v0 = vp) or cyclic (v0..v_{p-1}) sequences
    s = np.asarray(loop, dtype=np.int64)
    if s.size > 1 and s[0] == s[-1]:
        return s[:-1]
    return s


@dataclass(frozen=True)
class UnrootedLoop:
    """Rotation class of a loop, stored as its least rotation (no repeated end)."""
    canonical: tuple

    @staticmethod
    def from_rooted(loop) -> "UnrootedLoop":
        return UnrootedLoop(tuple(canonical_rotation(_cyclic(loop)).tolist()))

    def __len__(self):
        return len(self.canonical)

    @property
    def period(self) -> int:
        """Number of distinct rotations (smallest shift fixing the sequence)."""
        return int(kernels.rotation_period(np.array(self.canonical, dtype=np.int64)))

    @property
    def multiplicity(self) -> int:
        """How many times the primitive block repeats: length / period."""
        return len(self.canonical) // self.period

    def closed(self) -> np.ndarray:
        c = np.array(self.canonical, dtype=np.int64)
        return np.append(c, c[0])

    def polyline(self, graph: PlanarGraph) -> Polyline:
        return Polyline(graph.pos[self.closed()], closed=True)


def _steps(graph: PlanarGraph, loop) -> np.ndarray:
    c = _cyclic(loop)
    if c.size == 0:
        raise ValueError("empty loop")
    nxt = np.roll(c, -1)
    q = np.empty(c.size)
    for i, (u, v) in enumerate(zip(c, nxt)):
        if graph.is_boundary[u] or graph.is_boundary[v]:
            raise ValueError("loops cannot visit boundary vertices")
        lo, hi = graph.indptr[u], graph.indptr[u + 1]
        mask = graph.indices[lo:hi] == v
        if not mask.any():
            raise ValueError(f"({u}, {v}) is not an edge")
        q[i] = graph.q[lo:hi][mask].sum()
    return q


def rooted_loop_mass(graph: PlanarGraph, loop) -> float:
    """prod q(v_i, v_{i+1}) / |l| for a closed sequence (v_0, ..., v_p = v_0)."""
    seq = np.asarray(loop, dtype=np.int64)
    if seq.size < 2 or seq[0] != seq[-1]:
        raise ValueError("rooted loop must be closed with length >= 1")
    q = _steps(graph, seq)
    return float(np.prod(q) / q.size)


def unrooted_loop_mass(graph: PlanarGraph, loop) -> float:
    """Rooted mass times the number of distinct rotations: prod q / multiplicity."""
    if isinstance(loop, UnrootedLoop):
        u = loop
    else:
        if np.asarray(loop).size < 2:
            raise ValueError("trivial loops carry no mass")
        u = UnrootedLoop.from_rooted(loop)
    q = _steps(graph, u.canonical)
    return float(np.prod(q) / u.multiplicity)


def enumerate_loops(graph: PlanarGraph, max_length: int, max_walks: int = 20_000_000):
    """Every unrooted loop class of length <= max_length with its exact mass.

    Classes are generated once each by only extending closed walks whose
    first vertex is their smallest vertex and keeping the least rotation.
    """
    if max_length > 24 or graph.n_vertices > 12:
        raise ValueError("enumeration guard: max_length <= 24 and <= 12 vertices")
    inner = graph.interior
    out = {}
    budget = [max_walks]
    nbr = {int(v): [(int(w), float(q)) for w, q in
                    zip(graph.neighbors(v), graph.q[graph.indptr[v]:graph.indptr[v + 1]])
                    if not graph.is_boundary[w]] for v in inner}

    def rec(root, seq, weight):
        budget[0] -= 1
        if budget[0] < 0:
            raise RuntimeError("enumeration budget exhausted")
        v = seq[-1]
        for w, q in nbr[v]:
            if w < root:
                continue
            if w == root:
                cyc = tuple(seq)
                if tuple(canonical_rotation(cyc).tolist()) == cyc and cyc not in out:
                    u = UnrootedLoop(cyc)
                    out[cyc] = (u, weight * q / u.multiplicity)
            if len(seq) < max_length:
                seq.append(w)
                rec(root, seq, weight * q)
                seq.pop()

    for v in sorted(int(x) for x in inner):
        rec(v, [v], 1.0)
    items = sorted(out.values(), key=lambda t: (len(t[0]), t[0].canonical))
    return items


def total_loop_mass(graph: PlanarGraph) -> float:
    """-log det(I - Q) over the interior transition matrix."""
    from scipy.sparse import identity
    from scipy.sparse.linalg import splu
    Q = graph.transition_matrix()
    n = Q.shape[0]
    if n == 0:
        return 0.0
    M = (identity(n, format="csc") - Q.tocsc()).tocsc()
    if n <= 400:
        sign, logdet = np.linalg.slogdet(M.toarray())
        if sign <= 0 or not np.isfinite(logdet):
            raise ValueError("no killing: I - Q is singular")
        return float(-logdet)
    try:
        lu = splu(M)
    except RuntimeError as exc:
        raise ValueError("no killing: I - Q is singular") from exc
    d = lu.U.diagonal()
    if np.any(d == 0):
        raise ValueError("no killing: I - Q is singular")
    return float(-np.sum(np.log(np.abs(d))))


def spectral_tail_bound(graph: PlanarGraph, max_length: int) -> float:
    """Upper bound on the mass of loops longer than max_length.

    The mass of length-p loops is tr(Q^p)/p <= n rho^p / p.
    """
    Q = graph.transition_matrix(sparse=False)
    n = Q.shape[0]
    if n == 0:
        return 0.0
    rho = float(np.max(np.abs(np.linalg.eigvals(Q))))
    if rho == 0:
        return 0.0
    L = max_length + 1
    return n * rho ** L / (L * (1 - rho))


# --------------------------------------------------------------------------
# soups

class LoopSoup:
    """Finite multiset of loops in flat storage.

    ``points`` and ``offsets`` hold closed polylines (first point repeated at
    the end).  Lattice soups also keep ``vertices``, the canonical vertex
    sequences without the repeated end; continuum soups have ``delta == 0``.
    """

    def __init__(self, points, offsets, marks, delta: float, vertices=None,
                 vertex_offsets=None, domain=None, graph=None):
        self.points = np.asarray(points, dtype=complex)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.marks = np.asarray(marks, dtype=float)
        self.delta = float(delta)
        self.vertices = None if vertices is None else np.asarray(vertices, dtype=np.int64)
        self.vertex_offsets = None if vertex_offsets is None else np.asarray(vertex_offsets, dtype=np.int64)
        self.domain = domain
        self.graph = graph
        self._diam = None

    @staticmethod
    def from_vertex_loops(graph: PlanarGraph, flat, offs, marks) -> "LoopSoup":
        flat = np.asarray(flat, dtype=np.int64)
        offs = np.asarray(offs, dtype=np.int64)
        lens = np.diff(offs)
        # closed polylines: append the first vertex of each loop
        n = lens.size
        pts_off = offs + np.arange(n + 1)
        idx = np.empty(flat.size + n, dtype=np.int64)
        ins = np.ones(flat.size + n, bool)
        ins[pts_off[1:] - 1] = False
        idx[ins] = flat
        idx[~ins] = flat[offs[:-1]] if n else flat[:0]
        return LoopSoup(graph.pos[idx], pts_off, marks, graph.mesh, flat, offs,
                        graph.domain, graph)

    @staticmethod
    def empty(delta=0.0, domain=None, graph=None) -> "LoopSoup":
        return LoopSoup(np.zeros(0, complex), np.zeros(1, np.int64), np.zeros(0), delta,
                        np.zeros(0, np.int64) if graph is not None else None,
                        np.zeros(1, np.int64) if graph is not None else None, domain, graph)

    def __len__(self):
        return self.offsets.size - 1

    def loop_points(self, i: int) -> np.ndarray:
        return self.points[self.offsets[i]:self.offsets[i + 1]]

    def loop_vertices(self, i: int) -> np.ndarray:
        return self.vertices[self.vertex_offsets[i]:self.vertex_offsets[i + 1]]

    def unrooted(self, i: int) -> UnrootedLoop:
        return UnrootedLoop(tuple(self.loop_vertices(i).tolist()))

    def polylines(self):
        for i in range(len(self)):
            yield Polyline(self.loop_points(i), closed=True)

    def lengths(self) -> np.ndarray:
        return np.diff(self.vertex_offsets) if self.vertices is not None else np.diff(self.offsets) - 1

    def diameters(self) -> np.ndarray:
        if self._diam is None:
            self._diam = np.array([diameter(self.loop_points(i)) for i in range(len(self))])
        return self._diam

    def count_diameter_at_least(self, eps: float) -> int:
        return int(np.sum(self._diameter_mask(eps)))

    def _diameter_mask(self, eps: float) -> np.ndarray:
        # bounding-box bounds first, exact diameters only for undecided loops
        n = len(self)
        if n == 0:
            return np.zeros(0, bool)
        if eps <= 0:
            return np.ones(n, bool)
        if self._diam is not None:
            return self._diam >= eps
        x, y = self.points.real, self.points.imag
        starts = self.offsets[:-1]
        w = np.maximum.reduceat(x, starts) - np.minimum.reduceat(x, starts)
        h = np.maximum.reduceat(y, starts) - np.minimum.reduceat(y, starts)
        lower = np.maximum(w, h)
        upper = np.hypot(w, h)
        out = lower >= eps
        undecided = np.flatnonzero(~out & (upper >= eps))
        for i in undecided:
            out[i] = diameter(self.loop_points(i)) >= eps
        return out

    def subset(self, mask) -> "LoopSoup":
        idx = np.flatnonzero(mask)
        pts = [self.loop_points(i) for i in idx]
        offs = np.concatenate([[0], np.cumsum([p.size for p in pts])]).astype(np.int64)
        points = np.concatenate(pts) if pts else np.zeros(0, complex)
        verts = voffs = None
        if self.vertices is not None:
            vs = [self.loop_vertices(i) for i in idx]
            voffs = np.concatenate([[0], np.cumsum([v.size for v in vs])]).astype(np.int64)
            verts = np.concatenate(vs) if vs else np.zeros(0, np.int64)
        out = LoopSoup(points, offs, self.marks[idx], self.delta, verts, voffs,
                       self.domain, self.graph)
        if self._diam is not None:
            out._diam = self._diam[idx]
        return out

    # serialization ------------------------------------------------------------
    def to_jsonl(self) -> str:
        lines = []
        for i in range(len(self)):
            z = self.loop_points(i)
            rec = {"delta": self.delta,
                   "vertices": self.loop_vertices(i).tolist() if self.vertices is not None else [],
                   "poly": [[float(p.real), float(p.imag)] for p in z],
                   "mark": float(self.marks[i])}
            lines.append(json.dumps(rec))
        return "".join(line + "\n" for line in lines)

    @staticmethod
    def from_jsonl(text: str, graph: PlanarGraph | None = None) -> "LoopSoup":
        recs = [json.loads(line) for line in text.splitlines() if line.strip()]
        pts = [np.array([complex(x, y) for x, y in r["poly"]]) for r in recs]
        offs = np.concatenate([[0], np.cumsum([p.size for p in pts])]).astype(np.int64)
        verts = [np.array(r["vertices"], dtype=np.int64) for r in recs]
        has_v = bool(recs) and all(v.size for v in verts)
        delta = recs[0]["delta"] if recs else 0.0
        return LoopSoup(np.concatenate(pts) if pts else np.zeros(0, complex), offs,
                        [r["mark"] for r in recs], delta,
                        np.concatenate(verts) if has_v else None,
                        np.concatenate([[0], np.cumsum([v.size for v in verts])]) if has_v else None,
                        graph=graph)


# --------------------------------------------------------------------------
# samplers

class PeelSampler:
    """Exact soup sampler by vertex peeling with h-transformed excursions.

    For the i-th vertex u in the order, with earlier vertices removed, the
    return probability r and h(y) = P_y(hit u before removal or killing) come
    from one sparse solve.  The number of loops rooted at u is
    Poisson(-log(1 - r)) and each loop is a Logarithmic(r) number of
    excursions drawn from the h-transformed walk.
    """

    def __init__(self, graph: PlanarGraph, order=None, rejection: bool = False):
        from scipy.sparse.linalg import spsolve
        self.graph = graph
        inner = graph.interior
        self.order = np.array(inner if order is None else order, dtype=np.int64)
        if sorted(self.order.tolist()) != sorted(inner.tolist()):
            raise ValueError("order must be a permutation of the interior vertices")
        self.rejection = rejection
        Q = graph.transition_matrix().tocsr()
        loc = np.full(graph.n_vertices, -1)
        loc[inner] = np.arange(inner.size)
        n = inner.size
        src = np.repeat(np.arange(graph.n_vertices), np.diff(graph.indptr))
        self.r = np.zeros(n)
        self.hcum = []
        alive = np.ones(n, bool)
        from scipy.sparse import identity
        for u in self.order:
            iu = loc[u]
            alive[iu] = False
            W = np.flatnonzero(alive)
            h_loc = np.zeros(n)
            h_loc[iu] = 1.0
            if W.size:
                QWW = Q[W][:, W]
                rhs = np.asarray(Q[W, iu].todense()).ravel()
                if rhs.any():
                    M = (identity(W.size, format="csc") - QWW).tocsc()
                    hW = np.atleast_1d(spsolve(M, rhs))
                    resid = np.abs(M @ hW - rhs).max() if hW.size else 0.0
                    if not np.isfinite(resid) or resid > 1e-10:
                        raise np.linalg.LinAlgError("harmonic solve failed")
                    h_loc[W] = np.clip(hW, 0.0, 1.0)
            alive[iu] = True
            row = Q[iu]
            cols = row.indices
            ru = float(np.sum(row.data * h_loc[cols]))
            self.r[iu] = min(ru, 1.0)
            alive[iu] = False
            # transformed transition law on the CSR layout of the full graph
            h_full = np.zeros(graph.n_vertices)
            h_full[inner] = h_loc
            hv = h_full.copy()
            hv[u] = ru if ru > 0 else 1.0
            w = graph.q * h_full[graph.indices]
            w[~(h_full[src] > 0) & (src != u)] = 0.0
            denom = np.repeat(np.where(hv > 0, hv, 1.0), np.diff(graph.indptr))
            p = np.where(denom > 0, w / denom, 0.0)
            cum = np.zeros_like(p)
            for v in np.flatnonzero(np.diff(graph.indptr) > 0):
                lo, hi = graph.indptr[v], graph.indptr[v + 1]
                c = np.cumsum(p[lo:hi])
                if c[-1] > 0:
                    c = c / c[-1]
                    c[-1] = 1.0
                else:
                    c[:] = 1.0
                cum[lo:hi] = c
            self.hcum.append(cum)
        self._loc = loc
        self._rs = self.r[loc[self.order]]
        self._rates = -np.log1p(-self._rs)
        self._dead_before = []
        dead = graph.is_boundary.copy()
        for u in self.order:
            self._dead_before.append(dead.copy())
            dead[u] = True

    def sample(self, rng) -> LoopSoup:
        g = self.graph
        flats, lens = [], []
        Ks = rng.poisson(self._rates)
        for i in np.flatnonzero(Ks):
            u = self.order[i]
            r = self._rs[i]
            K = Ks[i]
            counts = rng.logseries(r, size=K).astype(np.int64)
            if self.rejection:
                flat, offs = self._reject(u, counts, self._dead_before[i], rng)
            else:
                flat, offs = kernels.conditioned_loops(g.indptr, g.indices, self.hcum[i],
                                                       int(u), counts, DEFAULT_CAP, rng)
            flats.append(flat)
            lens.append(np.diff(offs))
        if not flats:
            return LoopSoup.from_vertex_loops(g, np.zeros(0, np.int64), np.zeros(1, np.int64), [])
        flat = np.concatenate(flats)
        offs = np.concatenate([[0], np.cumsum(np.concatenate(lens))])
        marks = rng.random(offs.size - 1)
        return LoopSoup.from_vertex_loops(g, flat, offs, marks)

    def _reject(self, u, counts, dead, rng):
        g = self.graph
        stop = (dead | (np.arange(g.n_vertices) == u)).view(np.uint8)
        out, offs = [], [0]
        for k in counts:
            seq = []
            for _ in range(k):
                while True:
                    path, _ = kernels.walk_to_mask(g.indptr, g.indices, g.cumq, int(u),
                                                   stop, DEFAULT_CAP, rng)
                    if path[-1] == u:
                        break
                seq.extend(path[:-1].tolist())
            c = canonical_rotation(np.array(seq, dtype=np.int64))
            out.append(c)
            offs.append(offs[-1] + c.size)
        return np.concatenate(out), np.array(offs)


class WalkSampler:
    """Soup sampler from one killed walk per peeled vertex (any graph size).

    See :func:`loopsoup.kernels.soup_by_walks`.  A fresh uniformly random
    peeling order is drawn per sample unless ``order`` is fixed.
    """

    def __init__(self, graph: PlanarGraph, order=None):
        self.graph = graph
        self.order = None if order is None else np.asarray(order, dtype=np.int64)
        self._killed = graph.is_boundary.view(np.uint8)

    def sample(self, rng) -> LoopSoup:
        g = self.graph
        order = self.order if self.order is not None else rng.permutation(g.interior)
        flat, offs, ok = kernels.soup_by_walks(g.indptr, g.indices, g.cumq, order,
                                               self._killed, DEFAULT_CAP, rng)
        if not ok:
            raise RuntimeError("step cap exceeded")
        marks = rng.random(offs.size - 1)
        return LoopSoup.from_vertex_loops(g, flat, offs, marks)


def loop_soup_sampler(graph: PlanarGraph, method: str = "auto", order=None):
    """Cached sampler.  ``method`` is "peel", "reject", "walk" or "auto"."""
    if method == "auto":
        method = "peel" if graph.interior.size <= 400 else "walk"
    key = ("sampler", method, None if order is None else tuple(np.asarray(order).tolist()))
    s = graph._cache.get(key)
    if s is None:
        if method == "peel":
            s = PeelSampler(graph, order)
        elif method == "reject":
            s = PeelSampler(graph, order, rejection=True)
        elif method == "walk":
            s = WalkSampler(graph, order)
        else:
            raise ValueError(f"unknown sampling method {method!r}")
        graph._cache[key] = s
    return s


def sample_loop_soup(graph: PlanarGraph, rng, method: str = "auto", order=None) -> LoopSoup:
    return loop_soup_sampler(graph, method, order).sample(rng)


def restrict_soup(soup: LoopSoup, min_diameter: float = 0.0,
                  region: Callable[[np.ndarray], bool] | None = None) -> LoopSoup:
    """Keep loops with diameter >= min_diameter whose points satisfy ``region``."""
    mask = soup._diameter_mask(min_diameter)
    if region is not None:
        for i in np.flatnonzero(mask):
            mask[i] = bool(region(soup.loop_points(i)))
    return soup.subset(mask)


def class_counts(soup: LoopSoup, classes: Sequence[UnrootedLoop]) -> np.ndarray:
    """Multiplicity of each given class in the soup."""
    index = {c.canonical: k for k, c in enumerate(classes)}
    out = np.zeros(len(classes), np.int64)
    for i in range(len(soup)):
        k = index.get(tuple(soup.loop_vertices(i).tolist()))
        if k is not None:
            out[k] += 1
    return out
