"""Killed and predicate-stopped random walks on a PlanarGraph."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .lattice import PlanarGraph

DEFAULT_STEP_CAP = 10**8


class StepCapExceeded(RuntimeError):
    pass


@dataclass
class WalkPath:
    vertex_indices: np.ndarray
    killed: bool
    graph: PlanarGraph

    def __len__(self):
        return self.vertex_indices.size - 1

    @property
    def points(self) -> np.ndarray:
        return self.graph.pos[self.vertex_indices]


def _check_start(graph, start):
    if not 0 <= start < graph.n_vertices:
        raise ValueError("start vertex out of range")
    if graph.is_boundary[start]:
        raise ValueError("walk cannot start at a boundary vertex")


def run_walk(graph: PlanarGraph, start: int, rng, cap: int = DEFAULT_STEP_CAP) -> WalkPath:
    """Walk from ``start`` until the first boundary vertex."""
    _check_start(graph, start)
    path, ok = kernels.walk_to_mask(graph.indptr, graph.indices, graph.cumq, int(start),
                                    graph.is_boundary.view(np.uint8), cap, rng)
    if not ok:
        raise StepCapExceeded("step cap exceeded")
    return WalkPath(path, True, graph)


def run_walk_to(graph: PlanarGraph, start: int, stop_mask: np.ndarray, rng,
                cap: int = DEFAULT_STEP_CAP) -> WalkPath:
    """Walk until it enters ``stop_mask`` or the boundary."""
    _check_start(graph, start)
    stop = (np.asarray(stop_mask, bool) | graph.is_boundary).view(np.uint8)
    path, ok = kernels.walk_to_mask(graph.indptr, graph.indices, graph.cumq, int(start),
                                    stop, cap, rng)
    if not ok:
        raise StepCapExceeded("step cap exceeded")
    return WalkPath(path, bool(graph.is_boundary[path[-1]]), graph)


def run_walk_until(graph: PlanarGraph, start: int, stop: Callable[[int, int], bool], rng,
                   cap: int = DEFAULT_STEP_CAP) -> WalkPath:
    """Walk until ``stop(vertex, step)`` holds or the boundary is hit.

    The predicate is checked on the start (step 0) and then after every
    jump.  Transitions consume the generator exactly like :func:`run_walk`,
    so a boundary-only predicate reproduces it draw for draw.
    """
    _check_start(graph, start)
    path = [int(start)]
    if stop(int(start), 0):
        return WalkPath(np.array(path, np.int64), False, graph)
    indptr, indices, cumq = graph.indptr, graph.indices, graph.cumq
    v = int(start)
    t = 0
    while True:
        if t >= cap:
            raise StepCapExceeded("step cap exceeded")
        u = rng.random()
        lo, hi = indptr[v], indptr[v + 1]
        k = lo + int(np.searchsorted(cumq[lo:hi - 1], u, side="right"))
        v = int(indices[k])
        t += 1
        path.append(v)
        if graph.is_boundary[v] or stop(v, t):
            break
    return WalkPath(np.array(path, np.int64), bool(graph.is_boundary[v]), graph)


def walk_to_polyline(path: WalkPath):
    from .metrics import Polyline
    return Polyline(path.points, closed=False)
