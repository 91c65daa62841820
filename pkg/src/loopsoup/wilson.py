"""Wilson's algorithm, the good ordering, and loop addition along branches."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .erasure import loop_erase
from .lattice import Domain, PlanarGraph
from .metrics import bbox_diameter_bounds, diameter
from .soup import LoopSoup, loop_soup_sampler
from .walk import DEFAULT_STEP_CAP, StepCapExceeded


@dataclass
class VertexOrdering:
    vertices: np.ndarray

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.int64)
        if np.unique(self.vertices).size != self.vertices.size:
            raise ValueError("ordering repeats a vertex")

    def __len__(self):
        return self.vertices.size

    def __iter__(self):
        return iter(self.vertices.tolist())


def index_ordering(graph: PlanarGraph) -> VertexOrdering:
    return VertexOrdering(graph.interior)


def good_ordering(graph: PlanarGraph, domain: Domain | None = None,
                  max_level: int = 40) -> VertexOrdering:
    """Refining 6^-j grid ordering: per cell, the free vertex nearest its centre.

    Ties are broken by (x, y); picks of one level are ordered by cell (x index
    first).  ``domain`` is accepted for symmetry with the graph builders; the
    cells tile the whole plane.
    """
    inner = graph.interior
    z = graph.pos[inner]
    chosen = np.zeros(inner.size, bool)
    out = []
    for j in range(max_level + 1):
        free = np.flatnonzero(~chosen)
        if free.size == 0:
            break
        s = 6.0 ** j
        cx = np.floor(z[free].real * s)
        cy = np.floor(z[free].imag * s)
        d = np.abs(z[free] - ((cx + 0.5) / s + 1j * (cy + 0.5) / s))
        order = np.lexsort((z[free].imag, z[free].real, d, cy, cx))
        cxs, cys = cx[order], cy[order]
        first = np.ones(order.size, bool)
        first[1:] = (cxs[1:] != cxs[:-1]) | (cys[1:] != cys[:-1])
        picks = free[order[first]]
        chosen[picks] = True
        out.extend(inner[picks].tolist())
    if not chosen.all():
        rest = np.flatnonzero(~chosen)
        out.extend(inner[rest].tolist())
    return VertexOrdering(np.array(out, dtype=np.int64))


@dataclass
class WilsonRun:
    graph: PlanarGraph
    parent: np.ndarray
    branches: list
    erased: list
    starts: list
    walk_diameters: list = field(default_factory=list)

    def tree_key(self) -> tuple:
        return tuple(self.parent[self.graph.interior].tolist())

    def all_erased(self):
        for loops in self.erased:
            yield from loops

    def to_json(self) -> dict:
        return {"starts": [int(s) for s in self.starts],
                "branches": [b.tolist() for b in self.branches],
                "erased": [[l.tolist() for l in loops] for loops in self.erased]}


def wilsons_algorithm(graph: PlanarGraph, ordering, rng, max_branches: int | None = None,
                      track_walk_diameter: float | None = None,
                      cap: int = DEFAULT_STEP_CAP) -> WilsonRun:
    """Grow the wired forest by loop-erased walks stopped on the current tree.

    With ``track_walk_diameter = eps`` the diameter of every branch's random
    walk is recorded; diameters below eps are only recorded as a bounding-box
    upper bound.
    """
    order = ordering.vertices if isinstance(ordering, VertexOrdering) else np.asarray(ordering)
    in_tree = graph.is_boundary.astype(np.uint8)
    parent = np.full(graph.n_vertices, -1, np.int64)
    branches, erased, starts, wd = [], [], [], []
    n = graph.n_vertices
    for v in order:
        if max_branches is not None and len(branches) >= max_branches:
            break
        if in_tree[v]:
            continue
        path, ok = kernels.walk_to_mask(graph.indptr, graph.indices, graph.cumq, int(v),
                                        in_tree, cap, rng)
        if not ok:
            raise StepCapExceeded("step cap exceeded")
        dec = loop_erase(path, n)
        core = dec.core
        parent[core[:-1]] = core[1:]
        in_tree[core[:-1]] = 1
        branches.append(core)
        erased.append(dec.erased_loops)
        starts.append(int(v))
        if track_walk_diameter is not None:
            lo, hi = bbox_diameter_bounds(graph.pos[path])
            if hi < track_walk_diameter or lo > track_walk_diameter:
                wd.append(hi if hi < track_walk_diameter else lo)
            else:
                wd.append(diameter(graph.pos[path]))
    return WilsonRun(graph, parent, branches, erased, starts, wd)


def macroscopic_loop_count(obj, eps: float) -> int:
    """Number of loops with polyline diameter >= eps in a soup or a Wilson run."""
    if eps == float("inf"):
        return 0
    if isinstance(obj, LoopSoup):
        return obj.count_diameter_at_least(eps)
    pos = obj.graph.pos
    return sum(1 for l in obj.all_erased() if diameter(pos[l]) >= eps)


# --------------------------------------------------------------------------
# loop addition

def _residual(graph: PlanarGraph, killed: np.ndarray) -> PlanarGraph:
    if not killed.size:
        return graph
    if graph.n_vertices > 64:
        return graph.with_killed(killed)
    key = ("residual", tuple(sorted(killed.tolist())))
    g = graph._cache.get(key)
    if g is None:
        g = graph.with_killed(killed)
        graph._cache[key] = g
    return g


def attach_loops(branch: np.ndarray, soup: LoopSoup, rng):
    """Form the loops l~_j along ``branch`` from soup loops and reassemble a walk.

    A loop is attached to the first branch vertex it visits; loops at the
    same vertex are concatenated in increasing mark order, each rooted at a
    uniformly chosen visit to that vertex.  The last branch vertex is the
    attachment point and receives no loops.
    """
    k = branch.size - 1
    where = np.full(max(int(branch.max()) + 1, soup.graph.n_vertices if soup.graph else 0), -1)
    where[branch[:k]] = np.arange(k)
    buckets = [[] for _ in range(k)]
    for i in range(len(soup)):
        verts = soup.loop_vertices(i)
        hit = where[verts]
        hit = hit[hit >= 0]
        if hit.size:
            buckets[int(hit.min())].append(i)
    pieces, loops = [], []
    for j in range(k):
        g = branch[j]
        seq = [np.array([g], np.int64)]
        for i in sorted(buckets[j], key=lambda i: soup.marks[i]):
            verts = soup.loop_vertices(i)
            visits = np.flatnonzero(verts == g)
            s = visits[rng.integers(visits.size)] if visits.size > 1 else visits[0]
            rot = np.roll(verts, -s)
            seq.append(rot[1:])
            seq.append(np.array([g], np.int64))
        lj = np.concatenate(seq)
        loops.append(lj)
        pieces.append(lj)
    pieces.append(branch[k:])
    return loops, np.concatenate(pieces)


def couple_soup_to_branches(graph: PlanarGraph, ordering, rng, method: str = "auto",
                            max_branches: int | None = None):
    """Wilson branches plus fresh residual soups; returns (soups, run, walks).

    For branch k the soup lives on the graph with all earlier branch
    vertices killed.  Every reassembled walk has the branch as its loop
    erasure; this is checked here.
    """
    run = wilsons_algorithm(graph, ordering, rng, max_branches=max_branches)
    soups, walks = [], []
    removed = np.zeros(0, np.int64)
    for b in run.branches:
        g = _residual(graph, removed)
        soup = loop_soup_sampler(g, method).sample(rng)
        _, walk = attach_loops(b, soup, rng)
        core = loop_erase(walk, graph.n_vertices).core
        if not np.array_equal(core, b):
            raise AssertionError("loop erasure of reassembled walk differs from branch")
        soups.append(soup)
        walks.append(walk)
        removed = np.concatenate([removed, b[:-1]])
    return soups, run, walks


def run_to_jsonl(runs) -> str:
    return "".join(json.dumps(r.to_json()) + "\n" for r in runs)
