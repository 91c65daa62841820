"""Planar graphs clipped to a domain, plus empirical checks of the standing
assumptions on the walk (bounded density, small edges, crossing estimates)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .stats import wilson_interval


# --------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class Domain:
    """Bounded simply connected open set: disk, rectangle or simple polygon.

    Points on the boundary are classified as outside.
    """
    kind: str
    params: tuple

    @staticmethod
    def disk(center: complex = 0j, radius: float = 1.0) -> "Domain":
        if radius <= 0:
            raise ValueError("disk radius must be positive")
        return Domain("disk", (complex(center), float(radius)))

    @staticmethod
    def rectangle(x0: float, y0: float, x1: float, y1: float) -> "Domain":
        if not (x1 > x0 and y1 > y0):
            raise ValueError("rectangle needs x1 > x0 and y1 > y0")
        return Domain("rectangle", (float(x0), float(y0), float(x1), float(y1)))

    @staticmethod
    def polygon(vertices: Sequence[complex]) -> "Domain":
        pts = tuple(complex(v) for v in vertices)
        if len(pts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        return Domain("polygon", pts)

    # geometry ------------------------------------------------------------
    @property
    def bbox(self) -> tuple[float, float, float, float]:
        if self.kind == "disk":
            c, R = self.params
            return (c.real - R, c.imag - R, c.real + R, c.imag + R)
        if self.kind == "rectangle":
            return self.params
        xs = [p.real for p in self.params]
        ys = [p.imag for p in self.params]
        return (min(xs), min(ys), max(xs), max(ys))

    @property
    def diameter(self) -> float:
        if self.kind == "disk":
            return 2.0 * self.params[1]
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return math.hypot(x1 - x0, y1 - y0)
        pts = np.array(self.params)
        return float(np.abs(pts[:, None] - pts[None, :]).max())

    @property
    def area(self) -> float:
        if self.kind == "disk":
            return math.pi * self.params[1] ** 2
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return (x1 - x0) * (y1 - y0)
        p = np.array(self.params)
        q = np.roll(p, -1)
        return float(abs(np.sum(p.real * q.imag - q.real * p.imag)) / 2)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            c, R = self.params
            return np.abs(z - c) < R
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            return (z.real > x0) & (z.real < x1) & (z.imag > y0) & (z.imag < y1)
        inside = np.zeros(z.shape, dtype=bool)
        on_edge = np.zeros(z.shape, dtype=bool)
        x, y = z.real, z.imag
        pts = self.params
        for a, b in zip(pts, pts[1:] + pts[:1]):
            ax, ay, bx, by = a.real, a.imag, b.real, b.imag
            cond = (ay > y) != (by > y)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = ax + (y - ay) * (bx - ax) / (by - ay)
            inside ^= cond & (x < xcross)
            # points on the edge itself count as outside
            cr = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            within = ((x - ax) * (x - bx) <= 0) & ((y - ay) * (y - by) <= 0)
            on_edge |= (np.abs(cr) <= 1e-12 * max(1.0, abs(b - a))) & within
        return inside & ~on_edge

    def distance_to_boundary(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            c, R = self.params
            return np.abs(R - np.abs(z - c))
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            pts = (complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1))
        else:
            pts = self.params
        best = np.full(z.shape, np.inf)
        for a, b in zip(pts, pts[1:] + pts[:1]):
            best = np.minimum(best, _point_segment_distance(z, a, b))
        return best

    def first_crossing(self, u: complex, v: complex) -> complex:
        """Point where the segment from inside point u to outside v meets the boundary."""
        d = v - u
        if self.kind == "disk":
            c, R = self.params
            f = u - c
            A = abs(d) ** 2
            B = 2 * (f.real * d.real + f.imag * d.imag)
            C = abs(f) ** 2 - R * R
            disc = max(B * B - 4 * A * C, 0.0)
            t = (-B + math.sqrt(disc)) / (2 * A)
            t = min(max(t, 0.0), 1.0)
            return u + t * d
        if self.kind == "rectangle":
            x0, y0, x1, y1 = self.params
            pts = (complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1))
        else:
            pts = self.params
        best = 1.0
        for a, b in zip(pts, pts[1:] + pts[:1]):
            t = _segment_param(u, v, a, b)
            if t is not None and t < best:
                best = t
        if best == 1.0:
            return complex(v)
        return u + best * d

    # serialization helpers --------------------------------------------------
    def describe(self) -> dict:
        if self.kind == "disk":
            c, R = self.params
            return {"kind": "disk", "center": [c.real, c.imag], "radius": R}
        if self.kind == "rectangle":
            return {"kind": "rectangle", "bounds": list(self.params)}
        return {"kind": "polygon", "vertices": [[p.real, p.imag] for p in self.params]}


def _point_segment_distance(z, a, b):
    d = b - a
    L = abs(d) ** 2
    if L == 0:
        return np.abs(z - a)
    t = ((z - a) * np.conj(d)).real / L
    t = np.clip(t, 0.0, 1.0)
    return np.abs(z - (a + t * d))


def _segment_param(u, v, a, b):
    # parameter t in (0, 1] along u->v where it meets segment a-b
    r = v - u
    s = b - a
    den = r.real * s.imag - r.imag * s.real
    if den == 0:
        return None
    w = a - u
    t = (w.real * s.imag - w.imag * s.real) / den
    h = (w.real * r.imag - w.imag * r.real) / den
    if 0 < t <= 1 and -1e-12 <= h <= 1 + 1e-12:
        return t
    return None


# --------------------------------------------------------------------------
# graph

@dataclass(eq=False)
class PlanarGraph:
    """Embedded weighted directed graph, killed at its boundary vertices.

    Storage is CSR (``indptr``, ``indices``, ``weights``); ``cumq`` is the
    per-row running sum of transition probabilities used by the kernels.
    The object is treated as immutable after construction.
    """
    pos: np.ndarray
    is_boundary: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    mesh: float
    domain: Domain | None = None
    cumq: np.ndarray = field(init=False, repr=False)
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.pos = np.asarray(self.pos, dtype=complex)
        self.is_boundary = np.asarray(self.is_boundary, dtype=bool)
        self.indptr = np.asarray(self.indptr, dtype=np.int64)
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=float)
        n = self.pos.size
        if self.indptr.size != n + 1 or self.is_boundary.size != n:
            raise ValueError("inconsistent graph arrays")
        if np.any(self.weights <= 0):
            raise ValueError("edge weights must be positive")
        deg = np.diff(self.indptr)
        if np.any(deg[self.is_boundary] > 0):
            raise ValueError("boundary vertices must not have outgoing edges")
        if np.any(deg[~self.is_boundary] == 0):
            raise ValueError("interior vertex without outgoing edges")
        totals = np.add.reduceat(self.weights, self.indptr[:-1][deg > 0]) if self.weights.size else np.array([])
        row_total = np.zeros(n)
        row_total[deg > 0] = totals
        q = self.weights / np.repeat(row_total, deg)
        self.q = q
        cum = np.empty_like(q)
        for v in np.flatnonzero(deg > 0):
            lo, hi = self.indptr[v], self.indptr[v + 1]
            c = np.cumsum(q[lo:hi])
            c[-1] = 1.0
            cum[lo:hi] = c
        self.cumq = cum
        self._check_reaches_boundary()

    def _check_reaches_boundary(self):
        n = self.n_vertices
        src = np.repeat(np.arange(n), np.diff(self.indptr))
        # reverse BFS from the boundary
        order = np.argsort(self.indices, kind="stable")
        rptr = np.zeros(n + 1, np.int64)
        np.add.at(rptr, self.indices + 1, 1)
        rptr = np.cumsum(rptr)
        rsrc = src[order]
        seen = self.is_boundary.copy()
        frontier = list(np.flatnonzero(seen))
        while frontier:
            v = frontier.pop()
            for u in rsrc[rptr[v]:rptr[v + 1]]:
                if not seen[u]:
                    seen[u] = True
                    frontier.append(u)
        if not seen.all():
            raise ValueError("some interior vertex cannot reach the boundary")

    # basic accessors -----------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return self.pos.size

    @property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @property
    def boundary_vertices(self) -> set:
        return set(np.flatnonzero(self.is_boundary).tolist())

    @property
    def vertices(self) -> list:
        return self.pos.tolist()

    @property
    def directed_edges(self) -> list:
        src = np.repeat(np.arange(self.n_vertices), np.diff(self.indptr))
        return list(zip(src.tolist(), self.indices.tolist(), self.weights.tolist()))

    @property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        if "xy" not in self._cache:
            self._cache["xy"] = (np.ascontiguousarray(self.pos.real),
                                 np.ascontiguousarray(self.pos.imag))
        return self._cache["xy"]

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def transition_matrix(self, sparse: bool = True):
        """Interior-to-interior transition matrix Q (rows/cols = self.interior)."""
        from scipy import sparse as sp
        inner = self.interior
        idx = np.full(self.n_vertices, -1)
        idx[inner] = np.arange(inner.size)
        src = np.repeat(np.arange(self.n_vertices), np.diff(self.indptr))
        keep = (idx[src] >= 0) & (idx[self.indices] >= 0)
        Q = sp.coo_matrix((self.q[keep], (idx[src[keep]], idx[self.indices[keep]])),
                          shape=(inner.size, inner.size)).tocsr()
        Q.sum_duplicates()
        return Q if sparse else Q.toarray()

    def with_killed(self, vertices: Iterable[int]) -> "PlanarGraph":
        """Copy in which ``vertices`` become boundary (absorbing) vertices."""
        kill = self.is_boundary.copy()
        kill[np.asarray(list(vertices), dtype=np.int64)] = True
        deg = np.diff(self.indptr).copy()
        src = np.repeat(np.arange(self.n_vertices), deg)
        keep = ~kill[src]
        deg[kill] = 0
        indptr = np.concatenate([[0], np.cumsum(deg)])
        return PlanarGraph(self.pos, kill, indptr, self.indices[keep],
                           self.weights[keep], self.mesh, self.domain)

    # serialization --------------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"graph v1 delta={float(self.mesh)!r}"]
        for i, (z, b) in enumerate(zip(self.pos, self.is_boundary)):
            lines.append(f"v {i} {float(z.real)!r} {float(z.imag)!r} {'boundary' if b else 'interior'}")
        for s, d, w in self.directed_edges:
            lines.append(f"e {int(s)} {int(d)} {float(w)!r}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "PlanarGraph":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or not lines[0].startswith("graph v1"):
            raise ValueError("missing 'graph v1' header")
        mesh = None
        for tok in lines[0].split()[2:]:
            if tok.startswith("delta="):
                mesh = float(tok[6:])
        if mesh is None:
            raise ValueError("header lacks delta=")
        verts, edges = {}, []
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "v" and len(parts) == 5:
                if parts[4] not in ("interior", "boundary"):
                    raise ValueError(f"bad vertex kind: {parts[4]}")
                verts[int(parts[1])] = (complex(float(parts[2]), float(parts[3])),
                                        parts[4] == "boundary")
            elif parts[0] == "e" and len(parts) == 4:
                edges.append((int(parts[1]), int(parts[2]), float(parts[3])))
            else:
                raise ValueError(f"malformed line: {ln}")
        n = len(verts)
        if sorted(verts) != list(range(n)):
            raise ValueError("vertex ids must be 0..n-1")
        pos = [verts[i][0] for i in range(n)]
        bnd = [verts[i][1] for i in range(n)]
        return graph_from_edges(pos, bnd, edges, mesh)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @staticmethod
    def load(path) -> "PlanarGraph":
        with open(path) as fh:
            return PlanarGraph.from_text(fh.read())


def graph_from_edges(pos, boundary, edges, mesh, domain=None) -> PlanarGraph:
    """Build a graph from (src, dst, weight) triples; edge order within a row is kept."""
    n = len(pos)
    edges = list(edges)
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    w = np.array([e[2] for e in edges], dtype=float)
    if src.size and (src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n):
        raise ValueError("edge endpoint out of range")
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=n) if src.size else np.zeros(n, np.int64)
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return PlanarGraph(np.asarray(pos, dtype=complex), np.asarray(boundary, dtype=bool),
                       indptr, dst[order], w[order], float(mesh), domain)


def transition_probability(graph: PlanarGraph, u: int, v: int) -> float:
    if graph.is_boundary[u]:
        raise ValueError("killed state has no transitions")
    lo, hi = graph.indptr[u], graph.indptr[u + 1]
    mask = graph.indices[lo:hi] == v
    return float(graph.q[lo:hi][mask].sum())


# --------------------------------------------------------------------------
# lattice builders

def _as_float(delta) -> float:
    if isinstance(delta, str):
        delta = Fraction(delta)
    return float(delta)


def _lattice(delta: float, domain: Domain, offsets=None):
    x0, y0, x1, y1 = domain.bbox
    i0, i1 = math.ceil(x0 / delta) - 1, math.floor(x1 / delta) + 1
    j0, j1 = math.ceil(y0 / delta) - 1, math.floor(y1 / delta) + 1
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1))
    z = ii * delta + 1j * (jj * delta)
    if offsets is not None:
        z = z + offsets.reshape(z.shape)
    return z, i0, j0


def _build(delta, domain: Domain, points: np.ndarray) -> PlanarGraph:
    # points is a 2D array indexed [row j, column i]
    inside = domain.contains(points)
    if not inside.any():
        raise ValueError("domain too small for mesh")
    rows, cols = points.shape
    jj, ii = np.nonzero(inside)
    # row-major order: by y then x
    n_int = jj.size
    index = np.full(points.shape, -1, np.int64)
    index[jj, ii] = np.arange(n_int)
    pos = list(points[jj, ii])
    boundary_index: dict = {}
    edges = []
    for k in range(n_int):
        j, i = jj[k], ii[k]
        u = points[j, i]
        for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            jn, in_ = j + dj, i + di
            t = index[jn, in_] if 0 <= jn < rows and 0 <= in_ < cols else -1
            if t < 0:
                c = domain.first_crossing(u, points[jn, in_])
                key = (c.real, c.imag)
                t = boundary_index.get(key)
                if t is None:
                    t = len(pos)
                    boundary_index[key] = t
                    pos.append(c)
            edges.append((k, int(t), 1.0))
    boundary = np.zeros(len(pos), bool)
    boundary[n_int:] = True
    return graph_from_edges(pos, boundary, edges, delta, domain)


def build_square_lattice(delta, domain: Domain) -> PlanarGraph:
    """delta Z^2 clipped to ``domain``; crossing edges end at boundary vertices."""
    d = _as_float(delta)
    if not 0 < d < domain.diameter / 4:
        if d > 0 and not domain.contains(_lattice(d, domain)[0]).any():
            raise ValueError("domain too small for mesh")
        raise ValueError("need 0 < delta < diameter/4")
    pts, _, _ = _lattice(d, domain)
    return _build(d, domain, pts)


def build_perturbed_lattice(delta, domain: Domain, jitter: float, seed: int) -> PlanarGraph:
    """Square lattice with each site moved uniformly in a square of side 2*jitter*delta."""
    if not 0 <= jitter <= 0.3:
        raise ValueError("jitter must lie in [0, 0.3]")
    d = _as_float(delta)
    if not 0 < d < domain.diameter / 4:
        raise ValueError("need 0 < delta < diameter/4")
    pts, _, _ = _lattice(d, domain)
    rng = np.random.default_rng(seed)
    off = rng.uniform(-jitter * d, jitter * d, size=(pts.size, 2))
    offsets = off[:, 0] + 1j * off[:, 1]
    if jitter == 0:
        offsets = np.zeros(pts.size, complex)
    pts = pts + offsets.reshape(pts.shape)
    return _build(d, domain, pts)


def small_graph(interior: dict, boundary: Sequence[str], positions: dict | None = None,
                mesh: float = 1.0) -> tuple[PlanarGraph, dict]:
    """Tiny hand-made graph from named vertices.

    ``interior`` maps a name to its list of (neighbor name, weight).  Returns
    the graph and the name -> index map.
    """
    names = list(interior) + list(boundary)
    idx = {nm: i for i, nm in enumerate(names)}
    if positions is None:
        positions = {nm: complex(i, 0) for i, nm in enumerate(names)}
    edges = []
    for nm, nbrs in interior.items():
        for other, w in nbrs:
            edges.append((idx[nm], idx[other], w))
    pos = [positions[nm] for nm in names]
    bnd = [nm in boundary for nm in names]
    return graph_from_edges(pos, bnd, edges, mesh), idx


def graph_ab() -> tuple[PlanarGraph, dict]:
    """Two interior vertices a, b; each steps to the other or to its own boundary w.p. 1/2."""
    return small_graph(
        {"a": [("b", 1.0), ("da", 1.0)], "b": [("a", 1.0), ("db", 1.0)]},
        ["da", "db"],
        {"a": 0j, "b": 1 + 0j, "da": -1 + 0j, "db": 2 + 0j},
    )


def graph_abc() -> tuple[PlanarGraph, dict]:
    """Path a - b - c with every vertex also joined to the boundary."""
    return small_graph(
        {"a": [("b", 1.0), ("da", 1.0)],
         "b": [("a", 1.0), ("c", 1.0), ("db", 1.0)],
         "c": [("b", 1.0), ("dc", 1.0)]},
        ["da", "db", "dc"],
        {"a": 0j, "b": 1 + 0j, "c": 2 + 0j, "da": -1j, "db": 1 - 1j, "dc": 2 - 1j},
    )


def wired_grid_2x2() -> PlanarGraph:
    """2x2 interior grid whose outer edges all lead to the boundary."""
    return build_square_lattice(1.0, Domain.rectangle(0, 0, 3, 3))


# --------------------------------------------------------------------------
# assumption checks

def check_bounded_density(graph: PlanarGraph) -> int:
    """Largest number of vertices in a closed delta-ball centred at a vertex.

    Vertex-centred balls are the witness set: any ball of radius delta that
    holds k vertices sits inside the 2*delta ball around one of them.
    """
    from scipy.spatial import cKDTree
    pts = np.column_stack([graph.pos.real, graph.pos.imag])
    tree = cKDTree(pts)
    counts = tree.query_ball_point(pts, r=graph.mesh * (1 + 1e-9), return_length=True)
    return int(np.max(counts))


def max_edge_diameter(graph: PlanarGraph) -> float:
    src = np.repeat(np.arange(graph.n_vertices), np.diff(graph.indptr))
    if src.size == 0:
        return 0.0
    return float(np.abs(graph.pos[src] - graph.pos[graph.indices]).max())


@dataclass
class CrossingEstimate:
    estimate: float
    low: float
    high: float
    trials: int
    start_vertex: int
    per_start: list


def estimate_crossing_probability(graph: PlanarGraph, anchor: complex, scale: float,
                                  orientation: str = "horizontal", starts="center",
                                  trials: int = 1000, rng=None, cap: int = 10**8
                                  ) -> CrossingEstimate:
    """Frequency of crossing the scaled 3:1 rectangle between its end balls.

    The rectangle is ``anchor + scale * ([0,3] x [0,1])`` (axes swapped for
    ``orientation="vertical"``); the walk starts in the ball of radius
    scale/4 around the first end point and must enter the ball around the
    far end point before leaving the rectangle.  ``starts`` is "center",
    "all" or an integer number of evenly spread start vertices; the worst
    start is reported.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(rng)

    def local(z):
        w = (np.asarray(z) - anchor) / scale
        return w if orientation == "horizontal" else w.imag + 1j * w.real

    w = local(graph.pos)
    in_rect = (w.real > 0) & (w.real < 3) & (w.imag > 0) & (w.imag < 1)
    start_ball = np.abs(w - (0.5 + 0.5j)) < 0.25
    target = np.abs(w - (2.5 + 0.5j)) < 0.25
    cand = np.flatnonzero(start_ball & ~graph.is_boundary)
    if cand.size == 0:
        raise ValueError("no vertex in start ball")
    if starts == "center":
        chosen = [cand[np.argmin(np.abs(w[cand] - (0.5 + 0.5j)))]]
    elif starts == "all":
        chosen = list(cand)
    else:
        k = min(int(starts), cand.size)
        chosen = list(cand[np.linspace(0, cand.size - 1, k).astype(int)])
    stop = (~in_rect | target | graph.is_boundary).astype(np.uint8)
    per = []
    for s in chosen:
        ends, _ = kernels.walk_endpoints(graph.indptr, graph.indices, graph.cumq,
                                         int(s), stop, int(trials), cap, rng)
        hits = int(np.sum(target[ends[ends >= 0]]))
        lo, hi = wilson_interval(hits, trials)
        per.append((int(s), hits / trials, lo, hi))
    worst = min(per, key=lambda r: r[1])
    return CrossingEstimate(worst[1], worst[2], worst[3], trials, worst[0], per)
